"""Steady periodic waves of the damped driven cubic Schrodinger model

    psi_t = -i beta psi_xx - (1 + i alpha) psi + i |psi|^2 psi + F

and their one-parameter family in the wavenumber k = 1/period.

Profiles are stored on a unit-period internal grid (z = k*x in [0, 1)),
so continuation in k only changes the coefficient k^2 multiplying the
dispersion term.  The steady problem is solved by Newton iteration with
a translation-gauge bordering constraint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import __version__ as _tool_version
from .exceptions import (
    FoldError,
    NoConvergenceError,
    ParameterError,
    SingularJacobianError,
)
from .grid import Grid, resample_spectrum

DEFAULT_MAX_ITERS = 50
DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class LleParams:
    """Model parameters: detuning alpha, dispersion beta (nonzero),
    pump amplitude f_pump.

    Steady pattern construction requires a positive pump; a zero pump is
    admitted so the pure damped linear flow can serve as an oracle for
    the integrator.
    """

    alpha: float
    beta: float
    f_pump: float

    def __post_init__(self):
        if self.f_pump < 0:
            raise ParameterError(f"f_pump must be nonnegative, got {self.f_pump}")
        if self.beta == 0:
            raise ParameterError("beta must be nonzero")


def constant_states(params: LleParams) -> list[complex]:
    """All spatially constant steady states, found from the real cubic
    rho (1 + (alpha - rho)^2) = F^2 for rho = |psi|^2."""
    a, f = params.alpha, params.f_pump
    if f <= 0:
        raise ParameterError("constant states require a positive pump")
    roots = np.roots([1.0, -2.0 * a, 1.0 + a * a, -f * f])
    states = []
    for rho in roots:
        if abs(rho.imag) > 1e-9 * max(1.0, abs(rho.real)) or rho.real <= 0:
            continue
        rho = rho.real
        states.append(f / (1.0 + 1j * (a - rho)))
    return sorted(states, key=lambda s: abs(s))


def turing_point(params: LleParams) -> tuple[float, float]:
    """Pattern-forming instability threshold of the constant state.

    Returns (k_angular_critical, f_onset): the constant state with
    |psi|^2 = 1 first destabilizes at pump f_onset, toward rolls with
    angular wavenumber k_angular_critical.  Requires (alpha - 2)/beta > 0.
    """
    a, b = params.alpha, params.beta
    ksq = (a - 2.0) / b
    if ksq <= 0:
        raise ParameterError(
            f"no pattern-forming onset for alpha={a}, beta={b} "
            "(requires (alpha - 2)/beta > 0)"
        )
    f_onset = float(np.sqrt(1.0 + (a - 1.0) ** 2))
    return float(np.sqrt(ksq)), f_onset


def turing_guess(
    params: LleParams, k: float, n_profile: int, amplitude: float
) -> np.ndarray:
    """Newton seed for the patterned branch: the least-modulus constant
    state plus a cosine along the constant state's most unstable
    direction at the wave's angular wavenumber."""
    psi_c = constant_states(params)[0]
    a, b = psi_c.real, psi_c.imag
    k_ang = 2.0 * np.pi * k
    disp = params.beta * k_ang**2 - params.alpha
    l11 = disp + 3.0 * a * a + b * b
    l22 = disp + a * a + 3.0 * b * b
    l12 = 2.0 * a * b
    mat = np.array([[-1.0 - l12, -l22], [l11, -1.0 + l12]])
    vals, vecs = np.linalg.eig(mat)
    direction = vecs[:, int(np.argmax(vals.real))].real
    direction = direction / np.linalg.norm(direction)
    z = np.arange(n_profile) / n_profile
    return psi_c + amplitude * np.cos(2.0 * np.pi * z) * (
        direction[0] + 1j * direction[1]
    )


def _unit_d2_matrix(n: int) -> np.ndarray:
    """Real spectral second-derivative matrix on the unit-period grid."""
    mult = (2j * np.pi * np.fft.fftfreq(n, d=1.0 / n)) ** 2
    return np.real(np.fft.ifft(mult[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0))


def _unit_dz(values: np.ndarray, order: int = 1) -> np.ndarray:
    """Spectral d/dz on the unit-period grid."""
    n = len(values)
    mult = (2j * np.pi * np.fft.fftfreq(n, d=1.0 / n)) ** order
    if order % 2 == 1 and n % 2 == 0:
        mult[n // 2] = 0.0
    out = np.fft.ifft(mult * np.fft.fft(values))
    return out.real if np.isrealobj(values) else out


def steady_residual(params: LleParams, k: float, values: np.ndarray) -> np.ndarray:
    """Right-hand side of the evolution equation at a candidate profile
    (zero for a steady state), on the unit grid."""
    phi_zz = _unit_dz(values, 2)
    phi_xx = (k * k) * phi_zz
    return (
        -1j * params.beta * phi_xx
        - (1.0 + 1j * params.alpha) * values
        + 1j * np.abs(values) ** 2 * values
        + params.f_pump
    )


def linearization_blocks(
    params: LleParams, phi_r: np.ndarray, phi_i: np.ndarray, d2x: np.ndarray
) -> np.ndarray:
    """Real 2x2-block matrix of the linearized operator about (phi_r, phi_i):
    -Id + J L, with J the symplectic rotation and L the symmetric
    Schrodinger block operator.  d2x is the matrix of d^2/dx^2."""
    n = len(phi_r)
    sd = -params.beta * d2x - params.alpha * np.eye(n)
    l11 = sd + np.diag(3.0 * phi_r**2 + phi_i**2)
    l22 = sd + np.diag(phi_r**2 + 3.0 * phi_i**2)
    l12 = np.diag(2.0 * phi_r * phi_i)
    top = np.hstack([-np.eye(n) - l12, -l22])
    bot = np.hstack([l11, -np.eye(n) + l12])
    return np.vstack([top, bot])


@dataclass(frozen=True)
class PeriodicWave:
    """Steady periodic solution with wavenumber k = 1/period.

    values holds the complex profile on the unit-period grid; the
    physical profile is x -> values at z = k*x.
    """

    params: LleParams
    k: float
    values: np.ndarray
    residual_l2: float

    @property
    def n_profile(self) -> int:
        return len(self.values)

    @property
    def period(self) -> float:
        return 1.0 / self.k

    @property
    def coeffs(self) -> np.ndarray:
        """Complex Fourier coefficients over one period (FFT order, /n)."""
        return np.fft.fft(self.values) / self.n_profile

    def derivative_x(self, order: int = 1, n_points: int | None = None) -> np.ndarray:
        """d^order/dx^order of the profile on the unit grid (or resampled)."""
        vals = self.values if n_points is None else resample_spectrum(self.values, n_points)
        return (self.k**order) * _unit_dz(vals, order)

    def is_constant(self, tol: float = 1e-10) -> bool:
        return float(np.max(np.abs(self.values - self.values.mean()))) < tol

    def simulation_grid(self, periods: int, points_per_period: int) -> Grid:
        return Grid(periods * points_per_period, periods * self.period)

    def on_grid(self, grid: Grid, derivative_order: int = 0) -> np.ndarray:
        """Profile (or an x-derivative) tiled onto a simulation grid
        holding an integer number of periods."""
        periods = grid.length * self.k
        n_per = grid.n_points / periods
        if abs(periods - round(periods)) > 1e-8 or abs(n_per - round(n_per)) > 1e-8:
            raise ParameterError(
                "grid must hold an integer number of wave periods with an "
                f"integer number of points per period (got {periods} periods)"
            )
        per_period = self.derivative_x(derivative_order, n_points=int(round(n_per)))
        return np.tile(per_period, int(round(periods)))

    def translated(self, shift_x: float) -> "PeriodicWave":
        """Profile shifted rightward by shift_x: phi(x - shift_x)."""
        n = self.n_profile
        m = np.fft.fftfreq(n, d=1.0 / n)
        spec = np.fft.fft(self.values) * np.exp(-2j * np.pi * m * self.k * shift_x)
        return PeriodicWave(self.params, self.k, np.fft.ifft(spec), self.residual_l2)

    def residual_norm(self) -> float:
        """L2 norm of the steady residual over one x-period."""
        res = steady_residual(self.params, self.k, self.values)
        dx = self.period / self.n_profile
        return float(np.sqrt(dx * np.sum(np.abs(res) ** 2)))


def _newton(params, k, guess, max_iters, tol):
    """Core gauge-fixed Newton loop; returns (profile, residual, iterations)."""
    n = len(guess)
    d2x = (k * k) * _unit_d2_matrix(n)
    dx = (1.0 / k) / n

    gauge = _unit_dz(guess, 1)
    gauge_vec = np.concatenate([gauge.real, gauge.imag])
    use_gauge = np.linalg.norm(gauge_vec) > 1e-8 * np.linalg.norm(np.abs(guess))

    u = guess.copy()
    res = steady_residual(params, k, u)
    res_norm = float(np.sqrt(dx * np.sum(np.abs(res) ** 2)))
    for it in range(max_iters + 1):
        if res_norm < tol:
            return u, res_norm, it
        if it == max_iters:
            break
        jac = linearization_blocks(params, u.real, u.imag, d2x)
        rhs_full = -np.concatenate([res.real, res.imag])
        try:
            if use_gauge:
                m = np.zeros((2 * n + 1, 2 * n + 1))
                m[: 2 * n, : 2 * n] = jac
                m[: 2 * n, -1] = gauge_vec
                m[-1, : 2 * n] = gauge_vec
                offset = np.concatenate([(u - guess).real, (u - guess).imag])
                rhs = np.concatenate([rhs_full, [-gauge_vec @ offset]])
                delta = np.linalg.solve(m, rhs)[: 2 * n]
            else:
                delta = np.linalg.solve(jac, rhs_full)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError(
                f"singular Newton system at residual {res_norm:.3e} "
                "(possible fold in the branch)"
            ) from exc
        if not np.all(np.isfinite(delta)):
            raise SingularJacobianError(
                f"non-finite Newton step at residual {res_norm:.3e}"
            )
        u = u + delta[:n] + 1j * delta[n:]
        res = steady_residual(params, k, u)
        res_norm = float(np.sqrt(dx * np.sum(np.abs(res) ** 2)))
    raise NoConvergenceError(
        f"Newton did not reach tol={tol} in {max_iters} iterations",
        last_residual=res_norm,
    )


def solve_steady(
    params: LleParams,
    k: float,
    initial_guess: np.ndarray,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
) -> PeriodicWave:
    """Newton solve for a steady profile of wavenumber k from a complex
    initial guess on the unit-period grid.

    Translation degeneracy is removed by the bordering constraint
    <d/dz guess, phi - guess> = 0 whenever the guess is non-constant.
    """
    if k <= 0:
        raise ParameterError(f"wavenumber k must be positive, got {k}")
    guess = np.asarray(initial_guess, dtype=complex)
    if not np.all(np.isfinite(guess)) or np.max(np.abs(guess)) == 0:
        raise ParameterError("initial_guess must be finite and nonzero")
    u, res_norm, _ = _newton(params, k, guess, max_iters, tol)
    return PeriodicWave(params, k, u, res_norm)


def newton_iteration_count(
    params: LleParams,
    k: float,
    initial_guess: np.ndarray,
    tol: float = 1e-10,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> int:
    """Newton steps needed to reach tol from the given guess."""
    guess = np.asarray(initial_guess, dtype=complex)
    return _newton(params, k, guess, max_iters, tol)[2]


def continue_in_k(
    wave: PeriodicWave,
    k_target: float,
    steps: int,
    tol: float = DEFAULT_TOL,
) -> list[PeriodicWave]:
    """March the wave family from wave.k to k_target in the given number
    of Newton-corrected steps.  Returns the list of waves including the
    start; on a fold, raises FoldError carrying the partial branch."""
    if steps < 1:
        raise ParameterError("steps must be >= 1")
    if k_target <= 0:
        raise ParameterError("k_target must be positive")
    ks = np.linspace(wave.k, k_target, steps + 1)
    branch = [wave]
    prev_vals = [wave.values]
    for i, kx in enumerate(ks[1:], start=1):
        if len(prev_vals) >= 2:
            # secant predictor along the branch
            predictor = 2.0 * prev_vals[-1] - prev_vals[-2]
        else:
            predictor = prev_vals[-1]
        try:
            w = solve_steady(wave.params, float(kx), predictor, tol=tol)
        except (SingularJacobianError, NoConvergenceError) as exc:
            raise FoldError(
                f"continuation stalled at k={kx:.6g} (step {i}/{steps}): {exc}",
                partial=branch,
                k_fold=float(kx),
            ) from exc
        branch.append(w)
        prev_vals.append(w.values)
    return branch


def sensitivity_dk(wave: PeriodicWave) -> np.ndarray:
    """d(profile)/dk along the family at fixed parameters, from the
    bordered linear solve (gauge: orthogonal to the translation mode)."""
    n = wave.n_profile
    k = wave.k
    d2x = (k * k) * _unit_d2_matrix(n)
    jac = linearization_blocks(wave.params, wave.values.real, wave.values.imag, d2x)
    phi_zz = _unit_dz(wave.values, 2)
    dkg = -2j * wave.params.beta * k * phi_zz
    gauge = _unit_dz(wave.values, 1)
    gauge_vec = np.concatenate([gauge.real, gauge.imag])
    m = np.zeros((2 * n + 1, 2 * n + 1))
    m[: 2 * n, : 2 * n] = jac
    m[: 2 * n, -1] = gauge_vec
    m[-1, : 2 * n] = gauge_vec
    rhs = np.concatenate([-dkg.real, -dkg.imag, [0.0]])
    sol = np.linalg.solve(m, rhs)[: 2 * n]
    return sol[:n] + 1j * sol[n:]


def wave_to_dict(wave: PeriodicWave) -> dict:
    coeffs = wave.coeffs
    interleaved = np.empty(2 * len(coeffs))
    interleaved[0::2] = coeffs.real
    interleaved[1::2] = coeffs.imag
    return {
        "format_version": 1,
        "tool_version": _tool_version,
        "params": {
            "alpha": wave.params.alpha,
            "beta": wave.params.beta,
            "f_pump": wave.params.f_pump,
        },
        "k": wave.k,
        "n_profile": wave.n_profile,
        "coeffs_interleaved": interleaved.tolist(),
        "residual_l2": wave.residual_l2,
    }


def wave_from_dict(doc: dict) -> PeriodicWave:
    params = LleParams(**doc["params"])
    n = doc["n_profile"]
    flat = np.asarray(doc["coeffs_interleaved"])
    coeffs = flat[0::2] + 1j * flat[1::2]
    values = np.fft.ifft(coeffs * n)
    return PeriodicWave(params, doc["k"], values, doc["residual_l2"])


def save_wave(wave: PeriodicWave, path) -> None:
    with open(path, "w") as fh:
        json.dump(wave_to_dict(wave), fh, indent=2)


def load_wave(path) -> PeriodicWave:
    with open(path) as fh:
        return wave_from_dict(json.load(fh))
