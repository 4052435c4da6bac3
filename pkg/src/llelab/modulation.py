"""Phase modulation analysis: extracting the slowly varying translation
gamma(x, t) of a perturbed wave pattern, forming inverse- and
forward-modulated perturbation variables, and checking the coordinate
inversion and norm-equivalence estimates that relate them.

Sign convention used throughout the package: gamma is the local
rightward displacement of the pattern, psi(x) ~ phi(x - gamma(x)).
Then the forward-modulated variable is psi - phi(Id - gamma) and the
inverse-modulated variable is psi(Id + gamma) - phi; both are small for
the same gamma, differing at quadratic order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.interpolate
import scipy.optimize

from .bloch import LinearizedOperator, eigen_with_left
from .exceptions import (
    NonInvertiblePhaseError,
    ParameterError,
    PhaseUndefinedError,
    SteepPhaseError,
)
from .grid import Grid, derivative, evaluate_at, l2_norm, lp_norm, sobolev_norm
from .waves import PeriodicWave

DEFAULT_XI_CUT_FRACTION = 0.2  # fraction of the wave's angular wavenumber
DEFAULT_PHASE_THRESHOLD = 0.5
FIXED_POINT_TOL = 1e-12
FIXED_POINT_MAX_ITERS = 100


def compose_shift(
    grid: Grid, f: np.ndarray, gamma: np.ndarray, direction: str
) -> np.ndarray:
    """Composition with the phase shift: forward gives f(x + gamma(x)),
    backward gives f(x - gamma(x)), by trigonometric interpolation."""
    gamma = grid.validate(np.asarray(gamma), "gamma")
    if direction == "forward":
        points = grid.x + gamma
    elif direction == "backward":
        points = grid.x - gamma
    else:
        raise ParameterError(f"direction must be forward or backward, got {direction!r}")
    return evaluate_at(grid, f, points)


def invert_coordinate(
    grid: Grid,
    gamma: np.ndarray,
    tol: float = FIXED_POINT_TOL,
    max_iters: int = FIXED_POINT_MAX_ITERS,
) -> np.ndarray:
    """Inverse of the coordinate change x -> x - gamma(x), returned as
    gamma_tilde with (Id - gamma)^(-1) = Id + gamma_tilde.

    Uses the fixed-point identity gamma_tilde = gamma(Id + gamma_tilde),
    a contraction whenever ||gamma_x||_inf < 1.
    """
    gamma = grid.validate(np.asarray(gamma, dtype=float), "gamma")
    sup_gx = float(np.max(np.abs(derivative(grid, gamma, 1))))
    if sup_gx >= 1.0:
        raise NonInvertiblePhaseError(
            f"||gamma_x||_inf = {sup_gx:.4f} >= 1; Id - gamma is not invertible"
        )
    gt = gamma.copy()
    for _ in range(max_iters):
        new = evaluate_at(grid, gamma, grid.x + gt)
        defect = float(np.max(np.abs(new - gt)))
        gt = new
        if defect < tol:
            return gt
    from .exceptions import NoConvergenceError

    raise NoConvergenceError(
        f"coordinate-inversion fixed point stalled at defect {defect:.3e}",
        last_residual=defect,
    )


@dataclass
class PhaseField:
    """Extracted modulation phase at one time, with derivatives.

    gamma_t is filled by time differencing across adjacent snapshots
    (see phase_time_derivatives); it is None for an isolated extraction.
    """

    gamma: np.ndarray
    gamma_x: np.ndarray
    gamma_t: np.ndarray | None = None
    method: str = ""

    @property
    def sup_gx(self) -> float:
        return float(np.max(np.abs(self.gamma_x)))


@dataclass
class ExtractionBasis:
    """Precomputed low-frequency Bloch projectors for one (wave, grid).

    For each nonnegative sector index j with Floquet exponent
    xi_j = 2*pi*j/L below the cutoff, stores the left critical
    eigenvector and the scalar that maps the sector inner product to the
    phase coefficient.
    """

    grid: Grid
    wave: PeriodicWave
    xi_cut: float
    sectors: list[int] = field(default_factory=list)
    left_vecs: dict = field(default_factory=dict)
    coefs: dict = field(default_factory=dict)
    harmonics: np.ndarray | None = None

    @property
    def n_periods(self) -> int:
        return int(round(self.grid.length * self.wave.k))

    @property
    def points_per_period(self) -> int:
        return self.grid.n_points // self.n_periods


def make_extraction_basis(
    grid: Grid, wave: PeriodicWave, xi_cut: float | None = None
) -> ExtractionBasis:
    """Diagonalize the Bloch symbol on every sector below the cutoff and
    keep the critical-mode projectors."""
    if xi_cut is None:
        xi_cut = DEFAULT_XI_CUT_FRACTION * 2.0 * np.pi * wave.k
    basis = ExtractionBasis(grid=grid, wave=wave, xi_cut=xi_cut)
    n_per = basis.n_periods
    npp = basis.points_per_period
    if n_per * npp != grid.n_points or abs(grid.length * wave.k - n_per) > 1e-8:
        raise ParameterError("grid does not hold an integer number of wave periods")
    op = LinearizedOperator(wave, n_modes=npp)
    basis.harmonics = op.harmonics
    template = op.translation_coeffs()
    template_norm_sq = np.vdot(template, template).real
    j_max = min(n_per // 2, int(np.floor(xi_cut / (2.0 * np.pi / grid.length))))
    for j in range(j_max + 1):
        xi = 2.0 * np.pi * j / grid.length
        vals, vr, vl = eigen_with_left(op.matrix(xi))
        overlaps = np.abs(template.conj() @ vr) / np.linalg.norm(vr, axis=0)
        idx = int(np.argmax(overlaps))
        right = vr[:, idx]
        left = vl[:, idx]
        s_align = (template.conj() @ right) / template_norm_sq
        denom = np.vdot(left, right)
        basis.sectors.append(j)
        basis.left_vecs[j] = left
        basis.coefs[j] = -s_align / denom
    return basis


def _sector_coefficients(basis: ExtractionBasis, psi_minus_phi: np.ndarray) -> dict:
    """Stacked (real-part, imag-part) Fourier coefficient vectors of the
    perturbation on the projector's harmonic set, per sector."""
    grid = basis.grid
    n = grid.n_points
    n_per = basis.n_periods
    npp = basis.points_per_period
    fr = np.fft.fft(psi_minus_phi.real) / n
    fi = np.fft.fft(psi_minus_phi.imag) / n
    fr = fr.reshape(npp, n_per)
    fi = fi.reshape(npp, n_per)
    slots = basis.harmonics.astype(int) % npp
    return {j: np.concatenate([fr[slots, j], fi[slots, j]]) for j in basis.sectors}


def extract_phase_bloch(
    basis: ExtractionBasis,
    psi: np.ndarray,
    threshold: float = DEFAULT_PHASE_THRESHOLD,
) -> PhaseField:
    """Phase from projection of the perturbation onto the critical
    (translational) Bloch mode, sector by sector below the cutoff."""
    grid = basis.grid
    phi = basis.wave.on_grid(grid)
    tilde_v = psi - phi
    sup = float(np.max(np.abs(tilde_v)))
    if sup > threshold:
        raise PhaseUndefinedError(
            f"||psi - phi||_inf = {sup:.3f} exceeds threshold {threshold}"
        )
    sectors = _sector_coefficients(basis, tilde_v)
    n = grid.n_points
    gamma_hat = np.zeros(n, dtype=complex)
    for j in basis.sectors:
        g = basis.coefs[j] * (basis.left_vecs[j].conj() @ sectors[j])
        gamma_hat[j] = n * g
        if j > 0:
            gamma_hat[n - j] = n * np.conj(g)
    gamma_hat[0] = gamma_hat[0].real
    gamma = np.fft.ifft(gamma_hat).real
    gamma_x = derivative(grid, gamma, 1)
    sup_gx = float(np.max(np.abs(gamma_x)))
    if sup_gx >= 1.0:
        raise SteepPhaseError(f"extracted ||gamma_x||_inf = {sup_gx:.3f} >= 1")
    return PhaseField(gamma=gamma, gamma_x=gamma_x, method="bloch-projection")


def extract_phase_xcorr(
    grid: Grid,
    wave: PeriodicWave,
    psi: np.ndarray,
    threshold: float = DEFAULT_PHASE_THRESHOLD,
) -> PhaseField:
    """Phase from per-period cross-correlation of the state against the
    wave profile, cubic-spline smoothed across window centers."""
    phi = wave.on_grid(grid)
    tilde_v = psi - phi
    sup = float(np.max(np.abs(tilde_v)))
    if sup > threshold:
        raise PhaseUndefinedError(
            f"||psi - phi||_inf = {sup:.3f} exceeds threshold {threshold}"
        )
    period = wave.period
    n_per = int(round(grid.length * wave.k))
    npp = grid.n_points // n_per
    if n_per * npp != grid.n_points:
        raise ParameterError("grid does not hold an integer number of wave periods")
    prof_coeffs = np.fft.fft(wave.derivative_x(0, n_points=npp)) / npp
    modes = np.fft.fftfreq(npp, d=1.0 / npp)

    def window_shift(w_idx: int) -> float:
        seg = psi[w_idx * npp : (w_idx + 1) * npp]
        # correlation against the shifted profile is a trig polynomial in s
        seg_coeffs = np.fft.fft(seg) / npp
        cross = seg_coeffs * np.conj(prof_coeffs)

        def neg_corr(s):
            return -np.real(
                np.sum(cross * np.exp(2j * np.pi * modes * wave.k * s))
            )

        coarse = np.linspace(-0.5 * period, 0.5 * period, 32, endpoint=False)
        vals = [neg_corr(s) for s in coarse]
        s0 = coarse[int(np.argmin(vals))]
        res = scipy.optimize.minimize_scalar(
            neg_corr,
            bracket=(s0 - period / 32.0, s0, s0 + period / 32.0),
            method="brent",
            options={"xtol": 1e-12},
        )
        return float(res.x)

    shifts = np.array([window_shift(w) for w in range(n_per)])
    # unwrap (shifts are defined modulo one period) and smooth
    jumps = np.diff(shifts)
    jumps -= period * np.round(jumps / period)
    unwrapped = np.concatenate([[shifts[0]], shifts[0] + np.cumsum(jumps)])
    closure = unwrapped[0] - (unwrapped[-1] + (jumps[-1] if len(jumps) else 0.0))
    centers = (np.arange(n_per) + 0.5) * period
    nodes = np.concatenate([centers, [centers[0] + grid.length]])
    vals = np.concatenate([unwrapped, [unwrapped[0]]])
    if abs(closure) > 0.5 * period:
        raise SteepPhaseError("net phase winding across the domain; not a modulation")
    spline = scipy.interpolate.CubicSpline(nodes, vals, bc_type="periodic")
    gamma = spline(np.where(grid.x >= centers[0], grid.x, grid.x + grid.length))
    gamma_x = derivative(grid, gamma, 1)
    sup_gx = float(np.max(np.abs(gamma_x)))
    if sup_gx >= 1.0:
        raise SteepPhaseError(f"extracted ||gamma_x||_inf = {sup_gx:.3f} >= 1")
    return PhaseField(gamma=gamma, gamma_x=gamma_x, method="windowed-xcorr")


def extract_phase(
    grid: Grid,
    wave: PeriodicWave,
    psi: np.ndarray,
    method: str = "bloch-projection",
    basis: ExtractionBasis | None = None,
    threshold: float = DEFAULT_PHASE_THRESHOLD,
    xi_cut: float | None = None,
) -> PhaseField:
    """Extract the modulation phase of a state by the requested method."""
    psi = grid.validate(np.asarray(psi, dtype=complex), "psi")
    if method == "bloch-projection":
        if basis is None:
            basis = make_extraction_basis(grid, wave, xi_cut=xi_cut)
        return extract_phase_bloch(basis, psi, threshold=threshold)
    if method == "windowed-xcorr":
        return extract_phase_xcorr(grid, wave, psi, threshold=threshold)
    raise ParameterError(f"unknown phase-extraction method {method!r}")


def phase_time_derivatives(times: np.ndarray, phases: list[PhaseField]) -> None:
    """Fill gamma_t on a series of phase fields by centered differences
    (one-sided at the ends)."""
    if len(times) != len(phases):
        raise ParameterError("times and phases must have equal length")
    gammas = np.array([p.gamma for p in phases])
    gamma_t = np.gradient(gammas, times, axis=0)
    for p, gt in zip(phases, gamma_t):
        p.gamma_t = gt


@dataclass
class ModulatedPair:
    """Inverse- and forward-modulated perturbation fields for one state."""

    v_inverse: np.ndarray
    v_forward: np.ndarray
    phase: PhaseField


def modulated_pair(
    grid: Grid, psi: np.ndarray, wave: PeriodicWave, phase: PhaseField
) -> ModulatedPair:
    """Form v = psi(Id + gamma) - phi and vbar = psi - phi(Id - gamma)."""
    if phase.sup_gx >= 1.0:
        raise SteepPhaseError(f"||gamma_x||_inf = {phase.sup_gx:.3f} >= 1")
    phi = wave.on_grid(grid)
    v_inv = compose_shift(grid, psi, phase.gamma, "forward") - phi
    v_fwd = psi - compose_shift(grid, phi, phase.gamma, "backward")
    return ModulatedPair(v_inverse=v_inv, v_forward=v_fwd, phase=phase)


@dataclass
class EquivalenceReport:
    """Measured two-sided coordinate-change inequalities in L^p.

    All bounds involve only norms of phi_x, gamma, and gamma_x (never a
    derivative of psi).  slack >= 0 means the inequality holds; the
    violation flag fires below -1e-8.
    """

    p: float
    sup_gx: float
    norm_inverse: float  # ||psi - phi((Id-gamma)^-1)||_p
    norm_backward: float  # ||psi(Id-gamma) - phi||_p
    norm_forward: float  # ||psi - phi(Id+gamma)||_p
    correction: float  # ||phi_x||_inf (1+sup_gx)^(1/p) ||gamma||_inf ||gamma_x||_p
    slack_upper_inverse: float
    slack_lower_inverse: float
    slack_upper_forward: float
    slack_lower_forward: float
    violation: bool

    @property
    def slacks(self) -> tuple[float, float, float, float]:
        return (
            self.slack_upper_inverse,
            self.slack_lower_inverse,
            self.slack_upper_forward,
            self.slack_lower_forward,
        )


def check_equivalence_lp(
    grid: Grid,
    psi: np.ndarray,
    phi: np.ndarray,
    gamma: np.ndarray,
    p: float,
    violation_tol: float = 1e-8,
) -> EquivalenceReport:
    """Evaluate both two-sided coordinate-change bounds relating the
    three composition distances, reporting each inequality's slack.

    With g = ||gamma_x||_inf < 1 and Jacobian bounds of the coordinate
    change, A = ||psi - phi((Id-gamma)^-1)||_p and
    B = ||psi(Id-gamma) - phi||_p satisfy

        (1-g)^(1/p) B <= A <= (1+g)^(1/p) B,

    and D = ||psi - phi(Id+gamma)||_p satisfies the same bounds up to
    the correction ||phi_x||_inf (1+g)^(1/p) ||gamma||_inf ||gamma_x||_p.

    Finite-p norms are rectangle-rule quadratures, spectrally accurate
    for smooth fields, so the discrete slacks track the continuum ones
    to near machine precision.  At p = inf the prefactors degenerate to
    1 and the A-B comparison becomes a continuum equality of sups; grid
    maxima then agree only to O(dx^2) sampling error, so randomized
    violation counting is meaningful for finite p only.
    """
    psi = grid.validate(np.asarray(psi, dtype=complex), "psi")
    phi = grid.validate(np.asarray(phi, dtype=complex), "phi")
    gamma = grid.validate(np.asarray(gamma, dtype=float), "gamma")
    gamma_x = derivative(grid, gamma, 1)
    sup_gx = float(np.max(np.abs(gamma_x)))
    if sup_gx >= 1.0:
        raise NonInvertiblePhaseError(f"||gamma_x||_inf = {sup_gx:.4f} >= 1")

    gamma_tilde = invert_coordinate(grid, gamma)
    a = lp_norm(grid, psi - compose_shift(grid, phi, gamma_tilde, "forward"), p)
    b = lp_norm(grid, compose_shift(grid, psi, gamma, "backward") - phi, p)
    d = lp_norm(grid, psi - compose_shift(grid, phi, gamma, "forward"), p)

    expo = 0.0 if p == np.inf else 1.0 / p
    up = (1.0 + sup_gx) ** expo
    lo = (1.0 - sup_gx) ** expo
    phi_x_inf = lp_norm(grid, derivative(grid, phi, 1), np.inf)
    corr = phi_x_inf * up * lp_norm(grid, gamma, np.inf) * lp_norm(grid, gamma_x, p)

    slack_up_inv = up * b - a
    slack_lo_inv = a - lo * b
    slack_up_fwd = up * b + corr - d
    slack_lo_fwd = d - (lo * b - corr)
    violation = min(slack_up_inv, slack_lo_inv, slack_up_fwd, slack_lo_fwd) < -violation_tol
    return EquivalenceReport(
        p=p,
        sup_gx=sup_gx,
        norm_inverse=a,
        norm_backward=b,
        norm_forward=d,
        correction=corr,
        slack_upper_inverse=slack_up_inv,
        slack_lower_inverse=slack_lo_inv,
        slack_upper_forward=slack_up_fwd,
        slack_lower_forward=slack_lo_fwd,
        violation=bool(violation),
    )


@dataclass
class SobolevEquivalenceReport:
    """Smallest constant C >= 1 making the two-sided H^k comparison hold
    for one sample."""

    k: int
    norm_forward_hk: float  # ||psi - phi(Id+gamma)||_Hk
    norm_backward_hk: float  # ||psi(Id-gamma) - phi||_Hk
    gamma_x_hk1: float  # ||gamma_x||_H(k+1)
    constant: float


def check_equivalence_hk(
    grid: Grid,
    psi: np.ndarray,
    phi: np.ndarray,
    gamma: np.ndarray,
    k: int,
    gamma_x_bound: float = 10.0,
) -> SobolevEquivalenceReport:
    """Report the smallest C >= 1 with

        C^-1 B_k - G_k <= D_k <= C (B_k + G_k),

    where D_k = ||psi - phi(Id+gamma)||_Hk, B_k = ||psi(Id-gamma) - phi||_Hk
    and G_k = ||gamma_x||_H(k+1)."""
    gamma = grid.validate(np.asarray(gamma, dtype=float), "gamma")
    gamma_x = derivative(grid, gamma, 1)
    sup_gx = float(np.max(np.abs(gamma_x)))
    if sup_gx >= 1.0:
        raise NonInvertiblePhaseError(f"||gamma_x||_inf = {sup_gx:.4f} >= 1")
    g_k = sobolev_norm(grid, gamma_x, k + 1)
    if g_k > gamma_x_bound:
        raise ParameterError(
            f"||gamma_x||_H{k + 1} = {g_k:.3f} exceeds bound {gamma_x_bound}"
        )
    d_k = sobolev_norm(grid, psi - compose_shift(grid, phi, gamma, "forward"), k)
    b_k = sobolev_norm(grid, compose_shift(grid, psi, gamma, "backward") - phi, k)
    c_up = d_k / (b_k + g_k) if (b_k + g_k) > 0 else 1.0
    c_lo = b_k / (d_k + g_k) if (d_k + g_k) > 0 else 1.0
    return SobolevEquivalenceReport(
        k=k,
        norm_forward_hk=d_k,
        norm_backward_hk=b_k,
        gamma_x_hk1=g_k,
        constant=max(1.0, c_up, c_lo),
    )
