import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from qdcascade.constants import HBAR
from qdcascade.model import (
    QdParams, PulseSpec, bare_hamiltonian, collapse_channels, drive_pattern, envelope,
    ground_state, biexciton_state, hamiltonian, lindblad_rhs, liouvillian_apply,
    liouvillian_matrix, liouvillian_split,
)


def random_hermitian(seed, trace_one=False):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = 0.5 * (a + a.conj().T)
    if trace_one:
        h = h / np.trace(h).real
    return h


class TestParams:
    def test_table_defaults(self):
        p = QdParams()
        assert p.e_b == 4.0
        assert p.delta_xl == 2.0
        assert p.gamma_x == 0.005
        assert p.gamma_b == 0.010

    def test_validation(self):
        with pytest.raises(ValueError):
            QdParams(e_b=-1.0)
        with pytest.raises(ValueError):
            QdParams(fss=-0.5)
        with pytest.raises(ValueError):
            QdParams(gamma_x=-0.1)

    def test_pulse_validation(self):
        with pytest.raises(ValueError):
            PulseSpec(fwhm=0.0, area=1.0)
        with pytest.raises(ValueError):
            PulseSpec(fwhm=1.0, area=-1.0)
        with pytest.raises(ValueError):
            PulseSpec(fwhm=1.0, area=1.0, alpha_h=1.5)
        with pytest.raises(ValueError):
            PulseSpec(fwhm=1.0, area=1.0, shape="square")


class TestEnvelope:
    def test_gaussian_peak_value(self):
        # sqrt(4 ln2 / pi) * 16.953 / 10 evaluated by hand
        pulse = PulseSpec(fwhm=10.0, area=16.953)
        assert envelope(pulse, pulse.t0) == pytest.approx(1.5926280186, abs=1e-9)

    def test_gaussian_half_maximum(self):
        pulse = PulseSpec(fwhm=10.0, area=7.3)
        peak = envelope(pulse, pulse.t0)
        assert envelope(pulse, pulse.t0 + 5.0) == pytest.approx(peak / 2, rel=1e-12)
        assert envelope(pulse, pulse.t0 - 5.0) == pytest.approx(peak / 2, rel=1e-12)

    def test_zero_area(self):
        pulse = PulseSpec(fwhm=10.0, area=0.0)
        t = np.linspace(-50, 100, 301)
        assert np.all(envelope(pulse, t) == 0.0)

    def test_rectangular_plateau_and_half_maximum(self):
        # plateau sits tanh(fwhm/(2 edge_rise)) below area/fwhm; 1e-4 at the
        # default edge_rise of 0.1 fwhm
        pulse = PulseSpec(fwhm=10.0, area=5.0, shape="smoothed_rectangular")
        assert envelope(pulse, pulse.t0) == pytest.approx(0.5, rel=1e-4)
        assert envelope(pulse, pulse.t0 + 5.0) == pytest.approx(0.25, rel=1e-6)

    @pytest.mark.parametrize("shape", ["gaussian", "smoothed_rectangular"])
    @pytest.mark.parametrize("area", [1.0, 16.953])
    def test_area_quadrature(self, shape, area):
        pulse = PulseSpec(fwhm=7.0, area=area, shape=shape)
        val, _ = quad(lambda t: envelope(pulse, t),
                      pulse.t0 - 10 * pulse.fwhm, pulse.t0 + 10 * pulse.fwhm, limit=400)
        assert val == pytest.approx(area, rel=1e-6)

    def test_envelope_nonnegative(self):
        for shape in ("gaussian", "smoothed_rectangular"):
            pulse = PulseSpec(fwhm=3.0, area=9.0, shape=shape)
            t = np.linspace(pulse.t0 - 40, pulse.t0 + 40, 2001)
            assert np.all(envelope(pulse, t) >= 0.0)


class TestHamiltonian:
    def test_detuned_diagonal(self):
        p = QdParams(fss=3.0)
        h = hamiltonian(p, PulseSpec(fwhm=10.0, area=0.0), 0.0)
        assert np.allclose(np.diag(h), [0.0, 2.0015, 1.9985, 0.0], atol=1e-12)

    def test_zero_fss_symmetric(self):
        h = hamiltonian(QdParams(), PulseSpec(fwhm=10.0, area=0.0), 0.0)
        assert np.allclose(np.diag(h), [0.0, 2.0, 2.0, 0.0], atol=1e-15)
        assert np.max(np.abs(h - np.diag(np.diag(h)))) == 0.0

    def test_horizontal_drive_leaves_v_dark(self):
        p = QdParams()
        pulse = PulseSpec(fwhm=10.0, area=10.0, alpha_h=1.0)
        h = hamiltonian(p, pulse, pulse.t0)
        assert h[2, 0] == 0.0 and h[3, 2] == 0.0
        assert h[1, 0] != 0.0 and h[3, 1] != 0.0

    def test_hermitian_with_drive(self):
        p = QdParams(fss=2.0)
        pulse = PulseSpec(fwhm=5.0, area=9.0, alpha_h=0.6)
        h = hamiltonian(p, pulse, pulse.t0 + 1.3)
        assert np.max(np.abs(h - h.conj().T)) == 0.0

    def test_drive_coupling_value(self):
        pulse = PulseSpec(fwhm=10.0, area=10.0, alpha_h=0.6)
        p = QdParams()
        h = hamiltonian(p, pulse, pulse.t0)
        om = envelope(pulse, pulse.t0)
        assert h[1, 0] == pytest.approx(-0.5 * HBAR * om * 0.6, rel=1e-12)
        assert h[2, 0] == pytest.approx(-0.5 * HBAR * om * 0.8, rel=1e-12)


class TestCollapse:
    def test_channel_list(self):
        chans = collapse_channels(QdParams())
        assert len(chans) == 4
        rates = sorted(r for _, r in chans)
        assert rates == [0.005, 0.005, 0.005, 0.005]
        total_b = sum(r for op, r in chans if op[0, 3] != 0 or op[1, 3] != 0 or op[2, 3] != 0)
        assert total_b == pytest.approx(0.010)

    def test_biexciton_population_decay_rate(self):
        p = QdParams()
        d = lindblad_rhs(bare_hamiltonian(p), collapse_channels(p), biexciton_state())
        assert d[3, 3].real == pytest.approx(-0.010, abs=1e-15)

    def test_exciton_coherence_decays_at_gamma_x(self):
        # rate consistency required by the closed-form initial-value concurrence
        p = QdParams(fss=3.0)
        coh = np.zeros((4, 4), dtype=complex)
        coh[1, 2] = 1.0
        d = lindblad_rhs(bare_hamiltonian(p), collapse_channels(p), coh)
        lam = d[1, 2]
        assert lam.real == pytest.approx(-p.gamma_x, abs=1e-15)
        assert lam.imag == pytest.approx(-p.fss_mev / HBAR, rel=1e-12)

    def test_no_decay_channel_keeps_biexciton(self):
        p = QdParams(gamma_b=0.0, gamma_x=0.005)
        d = lindblad_rhs(bare_hamiltonian(p), collapse_channels(p), biexciton_state())
        assert np.max(np.abs(d)) == 0.0


class TestLiouvillian:
    def test_ground_state_stationary(self):
        p = QdParams()
        d = liouvillian_apply(p, PulseSpec(fwhm=10.0, area=0.0), 0.0, ground_state())
        assert np.max(np.abs(d)) == 0.0

    def test_biexciton_feeds_both_arms(self):
        p = QdParams()
        d = liouvillian_apply(p, PulseSpec(fwhm=10.0, area=0.0), 0.0, biexciton_state())
        assert d[3, 3].real == pytest.approx(-p.gamma_b, abs=1e-15)
        assert d[1, 1].real == pytest.approx(p.gamma_b / 2, abs=1e-15)
        assert d[2, 2].real == pytest.approx(p.gamma_b / 2, abs=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=0, max_value=10**6))
    def test_generator_preserves_hermiticity_and_trace(self, seed):
        p = QdParams(fss=1.7)
        pulse = PulseSpec(fwhm=6.0, area=11.0, alpha_h=0.7)
        rho = random_hermitian(seed)
        d = liouvillian_apply(p, pulse, pulse.t0 + 0.4, rho)
        assert np.max(np.abs(d - d.conj().T)) < 1e-12
        assert abs(np.trace(d)) < 1e-12

    def test_matrix_matches_direct_application(self):
        p = QdParams(fss=2.3)
        pulse = PulseSpec(fwhm=4.0, area=8.0, alpha_h=0.55)
        t = pulse.t0 - 1.0
        m = liouvillian_matrix(hamiltonian(p, pulse, t), collapse_channels(p))
        for seed in range(5):
            rho = random_hermitian(seed)
            direct = liouvillian_apply(p, pulse, t, rho)
            via_matrix = (m @ rho.reshape(16)).reshape(4, 4)
            assert np.max(np.abs(direct - via_matrix)) < 1e-13

    def test_split_is_affine_in_drive(self):
        p = QdParams(fss=1.0)
        pulse = PulseSpec(fwhm=5.0, area=7.0, alpha_h=0.8)
        l0, l1 = liouvillian_split(p, pulse.alpha_h)
        t = pulse.t0 + 0.7
        om = envelope(pulse, t)
        full = liouvillian_matrix(hamiltonian(p, pulse, t), collapse_channels(p))
        assert np.max(np.abs(l0 + om * l1 - full)) < 1e-12

    def test_zero_fss_basis_rotation_maps_polarizations(self):
        # rotating the exciton doublet maps the horizontally driven problem
        # exactly onto the diagonally driven one (superoperator identity)
        p = QdParams(fss=0.0)
        r = np.eye(4, dtype=complex)
        s = 1.0 / math.sqrt(2.0)
        r[1, 1] = r[1, 2] = s
        r[2, 1] = s
        r[2, 2] = -s
        rot = np.kron(r, r.conj())
        for alpha_h, alpha_rot in ((1.0, s),):
            l0_h, l1_h = liouvillian_split(p, alpha_h)
            l0_d, l1_d = liouvillian_split(p, alpha_rot)
            assert np.max(np.abs(rot @ l0_h @ rot.conj().T - l0_d)) < 1e-12
            assert np.max(np.abs(rot @ l1_h @ rot.conj().T - l1_d)) < 1e-12

    def test_drive_pattern_polarization_projection(self):
        d = drive_pattern(1.0)
        assert d[2, 0] == 0.0 and d[3, 2] == 0.0
        d = drive_pattern(0.0)
        assert d[1, 0] == 0.0 and d[3, 1] == 0.0
