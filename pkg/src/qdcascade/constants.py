"""Unit system shared by every module: energies in meV, times in ps, rates in 1/ps."""

HBAR = 0.6582119569  # meV*ps

MEV_PER_UEV = 1e-3  # fine-structure splittings are entered in ueV
