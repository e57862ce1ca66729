"""Polarization-entangled photon pairs from a driven biexciton-exciton cascade.

Simulates a four-level quantum emitter under two-photon resonant excitation,
computes the time-integrated two-photon density matrix via the quantum
regression theorem, and compares the resulting concurrence against closed-form
limit expressions.
"""

from .analytics import (
    AnalyticInputs, c0, c_estimate_fss0, c_full_estimate, delta_c_estimate,
    f_factor, g_factor, stark_shift_scale,
)
from .calibration import biexciton_peak_occupation, calibrate_pi_area, theta_seed
from .constants import HBAR
from .entanglement import concurrence, concurrence_x_oracle, fidelity_phi_plus
from .model import QdParams, PulseSpec, envelope, collapse_channels, hamiltonian, liouvillian_apply
from .propagator import (
    SuperPropagator, TimeGrid, evolve, free_propagator, integrated_free_observable, step_rk4,
)
from .tomography import (
    TomographyConfig, TwoPhotonMatrix, initial_value_density_matrix, pair_yield,
    two_photon_density_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticInputs", "HBAR", "PulseSpec", "QdParams", "SuperPropagator",
    "TimeGrid", "TomographyConfig", "TwoPhotonMatrix",
    "biexciton_peak_occupation", "c0", "c_estimate_fss0", "c_full_estimate",
    "calibrate_pi_area", "collapse_channels", "concurrence", "concurrence_x_oracle",
    "delta_c_estimate", "envelope", "evolve", "f_factor", "fidelity_phi_plus",
    "free_propagator", "g_factor", "hamiltonian", "initial_value_density_matrix",
    "integrated_free_observable", "liouvillian_apply", "pair_yield", "stark_shift_scale",
    "step_rk4", "theta_seed", "two_photon_density_matrix",
]
