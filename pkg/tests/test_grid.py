import numpy as np
import pytest

from llelab.exceptions import InvalidFieldError, ParameterError
from llelab.grid import (
    Grid,
    dealias,
    derivative,
    evaluate_at,
    evaluate_at_exact,
    integrate,
    l2_norm,
    lp_norm,
    resample_spectrum,
    sobolev_norm,
)


def band_limited_field(grid, rng, n_modes=20, complex_field=True):
    spec = np.zeros(grid.n_points, dtype=complex)
    m = np.arange(1, n_modes + 1)
    spec[m] = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
    if complex_field:
        spec[-m] = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
    else:
        spec[-m] = np.conj(spec[m])
    out = np.fft.ifft(spec) * grid.n_points
    return out if complex_field else out.real


class TestDerivative:
    def test_constant_derivative_is_zero(self, unit_grid):
        f = np.ones(unit_grid.n_points, dtype=complex)
        assert np.max(np.abs(derivative(unit_grid, f, 1))) < 1e-12

    def test_sine_second_derivative(self, unit_grid):
        f = np.sin(unit_grid.x)
        d2 = derivative(unit_grid, f, 2)
        assert np.max(np.abs(d2 + f)) < 1e-10

    def test_against_finite_differences(self):
        # 6th-order centered finite differences on a 4x finer grid
        g = Grid(256, 2.0 * np.pi)
        f = np.exp(np.sin(g.x))
        spectral = derivative(g, f, 1)

        fine = Grid(1024, 2.0 * np.pi)
        ff = np.exp(np.sin(fine.x))
        h = fine.spacing
        stencil = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / (60.0 * h)
        fd = sum(c * np.roll(ff, -s) for s, c in zip(range(-3, 4), stencil))
        assert np.max(np.abs(spectral - fd[::4])) < 1e-6

    def test_order_bounds(self, unit_grid):
        f = np.sin(unit_grid.x)
        with pytest.raises(ParameterError):
            derivative(unit_grid, f, 7)

    def test_composition_matches_second(self, unit_grid, rng):
        f = band_limited_field(unit_grid, rng)
        d11 = derivative(unit_grid, derivative(unit_grid, f, 1), 1)
        d2 = derivative(unit_grid, f, 2)
        scale = np.max(np.abs(d2))
        assert np.max(np.abs(d11 - d2)) < 1e-10 * scale

    def test_invalid_field(self, unit_grid):
        f = np.ones(unit_grid.n_points)
        f[3] = np.nan
        with pytest.raises(InvalidFieldError):
            derivative(unit_grid, f, 1)


class TestNorms:
    def test_zero_field(self, unit_grid):
        z = np.zeros(unit_grid.n_points, dtype=complex)
        for k in range(4):
            assert sobolev_norm(unit_grid, z, k) == 0.0

    def test_sine_l2_closed_form(self, unit_grid):
        # integral of sin^2 over [0, 2 pi) is pi
        f = np.sin(unit_grid.x)
        assert abs(sobolev_norm(unit_grid, f, 0) - np.sqrt(np.pi)) < 1e-12

    def test_sobolev_vs_quadrature(self, unit_grid, rng):
        f = band_limited_field(unit_grid, rng)
        direct = np.sqrt(
            l2_norm(unit_grid, f) ** 2
            + l2_norm(unit_grid, derivative(unit_grid, f, 1)) ** 2
            + l2_norm(unit_grid, derivative(unit_grid, f, 2)) ** 2
        )
        assert abs(sobolev_norm(unit_grid, f, 2) - direct) < 1e-10 * direct

    def test_sobolev_monotone_in_k(self, unit_grid, rng):
        f = band_limited_field(unit_grid, rng)
        norms = [sobolev_norm(unit_grid, f, k) for k in range(5)]
        assert all(a <= b + 1e-14 for a, b in zip(norms, norms[1:]))

    def test_lp_constant(self, unit_grid):
        f = (2.0 - 1.0j) * np.ones(unit_grid.n_points)
        assert abs(lp_norm(unit_grid, f, np.inf) - abs(2.0 - 1.0j)) < 1e-14

    def test_lp_sine_sup(self, unit_grid):
        f = np.sin(unit_grid.x)
        assert abs(lp_norm(unit_grid, f, np.inf) - 1.0) < 1.0 / unit_grid.n_points**2

    def test_l2_coincides_with_h0(self, unit_grid, rng):
        f = band_limited_field(unit_grid, rng)
        assert lp_norm(unit_grid, f, 2) == pytest.approx(
            sobolev_norm(unit_grid, f, 0), rel=1e-14
        )

    def test_parseval(self, unit_grid, rng):
        f = band_limited_field(unit_grid, rng)
        spec = np.fft.fft(f) / unit_grid.n_points
        parseval = np.sqrt(unit_grid.length * np.sum(np.abs(spec) ** 2))
        assert abs(lp_norm(unit_grid, f, 2) - parseval) < 1e-10 * parseval


class TestInterpolation:
    def test_pure_shift_lowest_mode(self):
        g = Grid(128, 2.0 * np.pi)
        f = np.exp(1j * g.x)
        out = evaluate_at(g, f, g.x + 0.37)
        assert np.max(np.abs(out - np.exp(1j * (g.x + 0.37)))) < 1e-10

    def test_matches_exact_trig_sum(self, rng):
        g = Grid(256, 13.0)
        f = band_limited_field(g, rng, n_modes=60)
        pts = rng.uniform(-5.0, 20.0, size=300)
        fast = evaluate_at(g, f, pts)
        exact = evaluate_at_exact(g, f, pts)
        assert np.max(np.abs(fast - exact)) < 1e-11 * np.max(np.abs(f))

    def test_real_input_stays_real(self, unit_grid, rng):
        f = band_limited_field(unit_grid, rng, complex_field=False)
        out = evaluate_at(unit_grid, f, unit_grid.x + 0.1)
        assert np.isrealobj(out)


class TestDealiasResample:
    def test_dealias_idempotent(self, unit_grid, rng):
        f = band_limited_field(unit_grid, rng, n_modes=60)
        once = dealias(unit_grid, f)
        twice = dealias(unit_grid, once)
        assert np.max(np.abs(once - twice)) < 1e-14

    def test_resample_roundtrip(self, unit_grid, rng):
        f = band_limited_field(unit_grid, rng, n_modes=30)
        up = resample_spectrum(f, 512)
        back = resample_spectrum(up, unit_grid.n_points)
        assert np.max(np.abs(back - f)) < 1e-12 * np.max(np.abs(f))

    def test_integrate_trig_polynomial(self, unit_grid):
        f = 2.0 + np.cos(3.0 * unit_grid.x)
        assert integrate(unit_grid, f).real == pytest.approx(4.0 * np.pi, rel=1e-13)
