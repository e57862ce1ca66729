import math

import numpy as np
import pytest

from qdcascade.constants import HBAR
from qdcascade.model import (
    QdParams, PulseSpec, biexciton_state, free_liouvillian, ground_state,
)
from qdcascade.propagator import (
    DivergentIntegralError, StepOverflowError, SuperPropagator, TimeGrid,
    evolve, free_propagator, free_spectral, integrated_free_observable, step_rk4,
)
from qdcascade.kernels import rk4_run
from qdcascade.model import envelope, liouvillian_split

NO_DRIVE = PulseSpec(fwhm=10.0, area=0.0)


def random_state(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


class TestStepRk4:
    def test_ground_state_fixed_point(self):
        p = QdParams()
        out = step_rk4(p, NO_DRIVE, ground_state(), 0.0, 0.05)
        assert np.max(np.abs(out - ground_state())) < 1e-14

    def test_biexciton_decay_against_exponential(self):
        p = QdParams()
        out = step_rk4(p, NO_DRIVE, biexciton_state(), 0.0, 0.01)
        assert out[3, 3].real == pytest.approx(math.exp(-p.gamma_b * 0.01), abs=1e-10)

    def test_trace_conserved(self):
        p = QdParams(fss=2.0)
        pulse = PulseSpec(fwhm=5.0, area=12.0, alpha_h=0.7)
        rho = random_state(3)
        out = step_rk4(p, pulse, rho, pulse.t0, 0.02)
        assert abs(np.trace(out) - np.trace(rho)) < 1e-12

    def test_matches_vectorized_kernel(self):
        # reference 4x4 stepper against the production 16-vector kernel
        p = QdParams(fss=1.2)
        pulse = PulseSpec(fwhm=4.0, area=9.0, alpha_h=0.8)
        rho = random_state(11)
        t, dt = pulse.t0 - 2.0, 0.02
        ref = step_rk4(p, pulse, rho, t, dt)
        l0, l1 = liouvillian_split(p, pulse.alpha_h)
        om = envelope(pulse, np.array([t, t + dt / 2, t + dt]))
        out = rk4_run(l0, l1, om, dt, rho.reshape(16))[-1].reshape(4, 4)
        assert np.max(np.abs(ref - out)) < 1e-13


class TestEvolve:
    def test_exponential_oracle_over_one_lifetime(self):
        p = QdParams()
        grid = TimeGrid(0.0, 1.0 / p.gamma_b)
        _, fin = evolve(p, NO_DRIVE, biexciton_state(), grid)
        assert fin[3, 3].real == pytest.approx(math.exp(-1.0), abs=1e-6)

    def test_pi_pulse_prepares_biexciton(self, theta10):
        # peak occupation is the calibration target; the occupation at the
        # window end is below it only through radiative decay
        p = QdParams()
        pulse = PulseSpec(fwhm=10.0, area=theta10)
        grid = TimeGrid(0.0, 60.0)
        traj, fin = evolve(p, pulse, ground_state(), grid)
        times = traj.times
        bmax = max(traj(t)[3, 3].real for t in np.linspace(25, 40, 61))
        assert bmax >= 0.9
        decay_corrected = fin[3, 3].real * math.exp(p.gamma_b * (60.0 - pulse.t0))
        assert decay_corrected >= 0.95
        assert times[0] == 0.0 and times[-1] == 60.0

    def test_halving_steps_changes_little(self, theta10):
        p = QdParams()
        pulse = PulseSpec(fwhm=10.0, area=theta10)
        t1, _ = evolve(p, pulse, ground_state(), TimeGrid(0.0, 200.0))
        t2, _ = evolve(p, pulse, ground_state(),
                       TimeGrid(0.0, 200.0, dt_pulse=0.01, dt_free=0.25))
        for tq in (10.0, 30.0, 60.0, 100.0, 200.0):
            assert np.max(np.abs(t1(tq) - t2(tq))) < 1e-7

    def test_trace_and_positivity_along_trajectory(self, theta10):
        p = QdParams(fss=3.0)
        pulse = PulseSpec(fwhm=10.0, area=theta10, alpha_h=0.7)
        traj, _ = evolve(p, pulse, ground_state(), TimeGrid(0.0, 120.0))
        for tq in (0.0, 20.0, 30.0, 42.0, 60.0, 120.0):
            rho = traj(tq)
            assert abs(np.trace(rho).real - 1.0) < 1e-10
            assert np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() > -1e-9

    def test_step_overflow_guard(self):
        p = QdParams()
        grid = TimeGrid(0.0, 1e9, dt_pulse=1e-3, dt_free=1e-3)
        with pytest.raises(StepOverflowError):
            evolve(p, NO_DRIVE, ground_state(), grid)

    def test_deterministic_rerun(self):
        p = QdParams(fss=1.5)
        pulse = PulseSpec(fwhm=5.0, area=10.0, alpha_h=0.6)
        t1, f1 = evolve(p, pulse, ground_state(), TimeGrid(0.0, 50.0))
        t2, f2 = evolve(p, pulse, ground_state(), TimeGrid(0.0, 50.0))
        assert np.array_equal(t1.states_vec, t2.states_vec)
        assert np.array_equal(f1, f2)


class TestSuperPropagator:
    def test_spectrum_matches_analytic_rates(self):
        p = QdParams(fss=2.4)
        sp = free_spectral(p)
        e = np.array([0.0, p.delta_xl + p.fss_mev / 2, p.delta_xl - p.fss_mev / 2, 0.0])
        g = np.array([0.0, p.gamma_x, p.gamma_x, p.gamma_b])
        expected = [0.0, -p.gamma_x, -p.gamma_x, -p.gamma_b]
        for a in range(4):
            for b in range(4):
                if a != b:
                    expected.append(-1j * (e[a] - e[b]) / HBAR - 0.5 * (g[a] + g[b]))
        got = np.sort_complex(np.round(sp.eigenvalues, 12))
        want = np.sort_complex(np.round(np.array(expected, dtype=complex), 12))
        assert np.max(np.abs(got - want)) < 1e-10

    def test_invariants(self):
        sp = free_spectral(QdParams(fss=1.0))
        assert np.max(sp.eigenvalues.real) <= 1e-10
        assert sp.diagonalizable
        recon = (sp.right * sp.eigenvalues) @ sp.left
        assert np.max(np.abs(recon - sp.matrix)) < 1e-9

    def test_degenerate_rates_fall_back_to_expm(self):
        # gamma_b == gamma_x makes the population block defective
        p = QdParams(gamma_x=0.005, gamma_b=0.005)
        fp = free_propagator(p, 37.0)
        assert fp.method == "expm"
        grid = TimeGrid(0.0, 37.0, dt_pulse=0.02, dt_free=0.05)
        _, fin = evolve(p, NO_DRIVE, biexciton_state(), grid)
        assert np.max(np.abs(fp(biexciton_state()) - fin)) < 1e-8


class TestFreePropagator:
    def test_identity_at_zero_delay(self):
        fp = free_propagator(QdParams(fss=3.0), 0.0)
        rho = random_state(5)
        assert np.max(np.abs(fp(rho) - rho)) < 1e-12

    def test_exponential_oracle(self):
        p = QdParams()
        fp = free_propagator(p, 100.0)
        assert fp(biexciton_state())[3, 3].real == pytest.approx(math.exp(-1.0), abs=1e-9)

    def test_unique_dark_state(self):
        fp = free_propagator(QdParams(fss=2.0), 1e6)
        out = fp(random_state(8))
        assert out[0, 0].real == pytest.approx(1.0, abs=1e-6)
        assert np.max(np.abs(out - np.diag([1, 0, 0, 0]))) < 1e-6

    @pytest.mark.parametrize("tau", [1.0, 10.0, 100.0])
    def test_spectral_vs_stepping(self, tau):
        # reference: classical RK4 with a step small enough that its own
        # phase error on the 3 rad/ps coherences stays below the tolerance
        from qdcascade.kernels import rk4_step_matrices

        p = QdParams(fss=1.3)
        fp = free_propagator(p, tau)
        l0, l1 = liouvillian_split(p, 1.0)
        dt = 0.002
        n = int(round(tau / dt))
        u_t = rk4_step_matrices(l0, l1, np.zeros(3), dt)[0].T.copy()
        z = np.stack([random_state(seed).reshape(16) for seed in range(100)])
        expected = np.stack([fp(z[i].reshape(4, 4)).reshape(16) for i in range(100)])
        for _ in range(n):
            z = z @ u_t
        assert np.max(np.abs(z - expected)) < 1e-8

    def test_positivity_retention_batch(self):
        p = QdParams(fss=0.8)
        fp = free_propagator(p, 23.0)
        for seed in range(1000):
            out = fp(random_state(seed))
            assert np.linalg.eigvalsh(0.5 * (out + out.conj().T)).min() >= -1e-9
            assert abs(np.trace(out).real - 1.0) < 1e-10
            assert np.max(np.abs(out - out.conj().T)) < 1e-12


class TestIntegratedObservable:
    def test_biexciton_lifetime(self):
        p = QdParams()
        w = np.zeros((4, 4)); w[3, 3] = 1.0
        val = integrated_free_observable(p, w, biexciton_state())
        assert val.real == pytest.approx(100.0, rel=1e-10)
        assert abs(val.imag) < 1e-9

    def test_zero_horizon(self):
        p = QdParams()
        w = np.zeros((4, 4)); w[3, 3] = 1.0
        assert integrated_free_observable(p, w, biexciton_state(), 0.0) == 0.0

    def test_ground_never_emits(self):
        p = QdParams()
        w = np.zeros((4, 4)); w[1, 1] = 1.0
        val = integrated_free_observable(p, w, ground_state())
        assert abs(val) < 1e-12

    def test_divergence_guard(self):
        p = QdParams()
        with pytest.raises(DivergentIntegralError):
            integrated_free_observable(p, np.eye(4), ground_state())

    @pytest.mark.parametrize("tau_max", [40.0, 400.0])
    def test_against_trapezoid(self, tau_max):
        p = QdParams(fss=2.0)
        rng = np.random.default_rng(17)
        w = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        chi = random_state(4)
        val = integrated_free_observable(p, w, chi, tau_max)
        taus = np.linspace(0.0, tau_max, 20001)
        sp = free_spectral(p)
        samples = []
        for t in taus[:: len(taus) // 400]:
            samples.append(np.trace(w @ (sp.expm(t) @ chi.reshape(16)).reshape(4, 4)))
        coarse_taus = taus[:: len(taus) // 400]
        num = np.trapezoid(samples, coarse_taus)
        assert val == pytest.approx(num, rel=1e-5)
