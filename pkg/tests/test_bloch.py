import numpy as np
import pytest

from llelab.bloch import (
    LinearizedOperator,
    assess_stability,
    fit_curvature,
    high_freq_rate,
    whitham_diffusion,
    _track_critical,
)
from llelab.exceptions import StabilityError
from llelab.waves import LleParams, PeriodicWave, constant_states

PARAMS = LleParams(alpha=1.0, beta=-1.0, f_pump=1.05)
K_SPEC = 1.0 / (2.0 * np.pi)


def constant_wave(params=PARAMS, n=32):
    psi_c = constant_states(params)[0]
    values = np.full(n, psi_c, dtype=complex)
    return PeriodicWave(params, K_SPEC, values, 0.0)


def analytic_constant_eigs(params, psi_c, kx):
    """Closed-form dispersion relation of the constant-coefficient
    2x2 block at total wavenumber kx."""
    a, b = psi_c.real, psi_c.imag
    disp = params.beta * kx**2 - params.alpha
    l11 = disp + 3.0 * a * a + b * b
    l22 = disp + a * a + 3.0 * b * b
    l12 = 2.0 * a * b
    rad = np.sqrt(complex(l12 * l12 - l11 * l22))
    return -1.0 + rad, -1.0 - rad


def lex_sorted(values):
    """Sort complex values lexicographically with rounding, so sets that
    agree to roundoff sort identically despite 1e-15 tie flips."""
    return np.array(sorted(values, key=lambda z: (round(z.real, 6), round(z.imag, 6))))


class TestBlochMatrix:
    def test_constant_state_closed_form(self):
        w = constant_wave()
        op = LinearizedOperator(w, n_modes=32)
        psi_c = w.values[0]
        for xi in (0.0, 0.2, -0.37):
            mat = op.matrix(xi)
            eigs = lex_sorted(np.linalg.eigvals(mat))
            expected = []
            for m in op.harmonics:
                kx = xi + 2.0 * np.pi * K_SPEC * m
                expected.extend(analytic_constant_eigs(PARAMS, psi_c, kx))
            expected = lex_sorted(expected)
            assert np.max(np.abs(eigs - expected)) < 1e-10

    def test_translation_mode_annihilated(self, wave):
        op = LinearizedOperator(wave, n_modes=wave.n_profile)
        vec = op.translation_coeffs()
        out = op.matrix(0.0) @ vec
        assert np.linalg.norm(out) < 1e-8 * np.linalg.norm(vec)

    def test_truncation_convergence(self, wave):
        lams = {}
        for n_modes in (32, 64):
            op = LinearizedOperator(wave, n_modes=n_modes)
            eigs = np.linalg.eigvals(op.matrix(0.15))
            lams[n_modes] = np.sort(eigs.real)[::-1][:10]
        assert np.max(np.abs(lams[32] - lams[64])) < 1e-8

    def test_conjugate_symmetry(self, wave):
        op = LinearizedOperator(wave, n_modes=48)
        for xi in (0.05, 0.21):
            plus = lex_sorted(np.linalg.eigvals(op.matrix(xi)))
            minus = lex_sorted(np.conj(np.linalg.eigvals(op.matrix(-xi))))
            assert np.max(np.abs(plus - minus)) < 1e-8


class TestStability:
    def test_unstable_constant_state(self):
        # above onset, the constant state is Turing-unstable
        w = constant_wave()
        op = LinearizedOperator(w, n_modes=32)
        spec = assess_stability(op, n_xi=32)
        assert spec.verdict == "unstable"
        assert spec.max_re_nonzero > 0

    def test_shipped_wave_stable(self, wave):
        op = LinearizedOperator(wave, n_modes=48)
        spec = assess_stability(op, n_xi=128)
        assert spec.verdict == "stable"
        assert spec.max_re_nonzero < 0
        assert spec.gap_at_zero < 1e-8
        assert spec.curvature > 0

    def test_stability_two_resolutions(self, wave):
        d_values = []
        for n_modes in (32, 64):
            op = LinearizedOperator(wave, n_modes=n_modes)
            spec = assess_stability(op, n_xi=64)
            assert spec.verdict == "stable"
            d_values.append(spec.curvature)
        assert d_values[0] == pytest.approx(d_values[1], rel=1e-6)

    def test_critical_curve_zero_at_origin(self, wave):
        op = LinearizedOperator(wave, n_modes=48)
        spec = assess_stability(op, n_xi=64)
        i0 = int(np.argmin(np.abs(spec.xi_samples)))
        assert abs(spec.critical_curve[i0]) < 1e-8


class TestHighFreqRate:
    def test_positive_and_below_one(self, wave):
        op = LinearizedOperator(wave, n_modes=48)
        spec = assess_stability(op, n_xi=64)
        rate = high_freq_rate(spec, low_cut=0.2 * 2.0 * np.pi * wave.k)
        assert 0.0 < rate <= 1.0

    def test_requires_stable(self):
        w = constant_wave()
        op = LinearizedOperator(w, n_modes=32)
        spec = assess_stability(op, n_xi=32)
        with pytest.raises(StabilityError):
            high_freq_rate(spec, low_cut=0.1)

    def test_truncation_stability(self, wave):
        rates = []
        for n_modes in (32, 64):
            op = LinearizedOperator(wave, n_modes=n_modes)
            spec = assess_stability(op, n_xi=64)
            rates.append(high_freq_rate(spec, low_cut=0.2 * 2.0 * np.pi * wave.k))
        assert abs(rates[0] - rates[1]) < 1e-6


class TestWhithamDiffusion:
    def test_positive_and_fit_quality(self, wave):
        d = whitham_diffusion(wave)
        assert d > 0

    def test_window_robustness(self, wave):
        d1 = whitham_diffusion(wave, xi_fit=0.05 * wave.k)
        d2 = whitham_diffusion(wave, xi_fit=0.10 * wave.k)
        assert d1 == pytest.approx(d2, rel=0.02)

    def test_cubic_remainder_bound(self, wave):
        # |lambda_c(xi) + d xi^2| <= C |xi|^3 over the fit window
        op = LinearizedOperator(wave, n_modes=48)
        xis = np.linspace(-0.1 * wave.k, 0.1 * wave.k, 17)
        lam = _track_critical(op, xis)
        d, _ = fit_curvature(xis, lam, 0.1 * wave.k)
        nonzero = np.abs(xis) > 1e-14
        remainder = np.abs(lam[nonzero].real + d * xis[nonzero] ** 2)
        c_bound = np.max(remainder / np.abs(xis[nonzero]) ** 3)
        assert np.all(remainder <= c_bound * np.abs(xis[nonzero]) ** 3 + 1e-15)
        assert np.isfinite(c_bound)

    def test_unstable_precondition(self):
        w = constant_wave()
        with pytest.raises(StabilityError):
            whitham_diffusion(w, n_modes=32)
