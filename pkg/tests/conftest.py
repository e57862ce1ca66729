"""Shared fixtures: the expensive sweep and headline-point computations are
session-scoped so the acceptance criteria and module tests reuse one pass."""
import math

import numpy as np
import pytest

from qdcascade.calibration import calibrate_pi_area, theta_seed
from qdcascade.cli import RunConfig, run_single, run_sweep
from qdcascade.model import QdParams, PulseSpec
from qdcascade.tomography import TomographyConfig, two_photon_density_matrix

INV_SQRT2 = 1.0 / math.sqrt(2.0)


@pytest.fixture(scope="session")
def theta10():
    """Calibrated two-photon pi area for a 10 ps Gaussian pulse."""
    seed = theta_seed(4.0, 10.0)
    return calibrate_pi_area(QdParams(), PulseSpec(fwhm=10.0, area=seed))


@pytest.fixture(scope="session")
def headline(theta10):
    """fss = 0, fwhm = 10 matrices for both laser polarisations."""
    p = QdParams()
    mh = two_photon_density_matrix(p, PulseSpec(fwhm=10.0, area=theta10, alpha_h=1.0))
    md = two_photon_density_matrix(p, PulseSpec(fwhm=10.0, area=theta10, alpha_h=INV_SQRT2))
    return {"theta": theta10, "H": mh, "D": md}


@pytest.fixture(scope="session")
def brute_matrix_10(theta10):
    """Brute-force cross-validation matrix at the headline point."""
    cfg = TomographyConfig(method="brute_force")
    return two_photon_density_matrix(
        QdParams(), PulseSpec(fwhm=10.0, area=theta10, alpha_h=1.0), cfg)


@pytest.fixture(scope="session")
def default_sweep():
    """The full default reproduction grid (Gaussian pulse)."""
    return run_sweep(RunConfig(threads=1))


@pytest.fixture(scope="session")
def rect_sweep():
    """Zero-splitting sweep with the smoothed rectangular pulse."""
    return run_sweep(RunConfig(threads=1, pulse_shape="smoothed_rectangular",
                               fss_grid="0", polarizations="H"))


@pytest.fixture(scope="session")
def yield_edge_rows():
    """Extra pair-yield points at the interval edges fwhm = 2 and 20 ps."""
    rows = []
    for fwhm in (2.0, 20.0):
        rows.append(run_single(RunConfig(fwhm=fwhm, fss_uev=0.0, alpha_h=1.0)))
    return rows
