"""Floquet-Bloch spectrum of the linearization about a periodic wave.

The linearized operator -Id + J L acts on (v_r, v_i); restricting to
Bloch waves exp(i xi x) * (periodic) and truncating to n_modes Fourier
harmonics per component yields a dense 2*n_modes complex matrix per
Floquet exponent xi in (-pi*k, pi*k].  Diffusive spectral stability is
certified from sampled eigenvalue curves: strict decay away from the
origin, a simple translational eigenvalue at xi = 0, and positive
curvature of the critical curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import FitQualityError, ParameterError, StabilityError
from .waves import PeriodicWave

DEFAULT_DELTA_GAP = 1e-3
DEFAULT_FIT_WINDOW_FRACTION = 0.1


def _harmonics(n_modes: int) -> np.ndarray:
    """Symmetric integer harmonic set {0, 1, .., h, -h, .., -1}.

    An even request is reduced by one: a lopsided set with an unpaired
    Nyquist harmonic breaks the conjugation symmetry of the spectrum at
    the truncation edge.
    """
    m_eff = n_modes if n_modes % 2 else n_modes - 1
    half = m_eff // 2
    return np.concatenate([np.arange(half + 1), np.arange(-half, 0)])


def _convolution_matrix(
    profile_coeffs: np.ndarray, harmonics: np.ndarray
) -> np.ndarray:
    """Multiplication by a periodic coefficient function as a matrix on
    the truncated harmonic set: T[c]_{mn} = chat_{m-n}."""
    n_src = len(profile_coeffs)
    diff = harmonics[:, None] - harmonics[None, :]
    mat = profile_coeffs[diff % n_src]
    # zero couplings beyond the resolved band of the coefficient spectrum
    return np.where(np.abs(diff) <= n_src // 2 - 1, mat, 0.0)


@dataclass
class LinearizedOperator:
    """Linearization -Id + J L about a wave, with symbol assembly data.

    The symbol is truncated to the symmetric harmonic set of size
    n_modes (rounded down to odd), giving matrices of size 2*len(set).
    """

    wave: PeriodicWave
    n_modes: int = 64

    def __post_init__(self):
        if self.n_modes < 4:
            raise ParameterError("n_modes must be >= 4")
        # coefficient functions are quadratic in the profile; evaluate
        # their spectra on a doubled grid so they are alias-free
        n_c = 2 * self.wave.n_profile
        prof = self.wave.derivative_x(0, n_points=n_c)
        pr, pi = prof.real, prof.imag
        c11 = np.fft.fft(3.0 * pr**2 + pi**2) / n_c
        c22 = np.fft.fft(pr**2 + 3.0 * pi**2) / n_c
        c12 = np.fft.fft(2.0 * pr * pi) / n_c
        self._modes = _harmonics(self.n_modes)
        self._t11 = _convolution_matrix(c11, self._modes)
        self._t22 = _convolution_matrix(c22, self._modes)
        self._t12 = _convolution_matrix(c12, self._modes)
        self._profile = prof
        self._n_c = n_c

    @property
    def k(self) -> float:
        return self.wave.k

    @property
    def size(self) -> int:
        """Number of retained harmonics per component."""
        return len(self._modes)

    @property
    def harmonics(self) -> np.ndarray:
        return self._modes

    def matrix(self, xi: float) -> np.ndarray:
        """Dense complex Bloch matrix at Floquet exponent xi."""
        w = self.wave
        if abs(xi) > np.pi * w.k * (1.0 + 1e-12):
            raise ParameterError(
                f"|xi| = {abs(xi)} outside the Brillouin zone (-pi*k, pi*k]"
            )
        n = self.size
        kx = xi + 2.0 * np.pi * w.k * self._modes
        disp = w.params.beta * kx**2 - w.params.alpha
        l11 = np.diag(disp.astype(complex)) + self._t11
        l22 = np.diag(disp.astype(complex)) + self._t22
        l12 = self._t12
        eye = np.eye(n)
        top = np.hstack([-eye - l12, -l22])
        bot = np.hstack([l11, -eye + l12])
        return np.vstack([top, bot])

    def translation_coeffs(self) -> np.ndarray:
        """Fourier coefficients of the translational mode (phi_x) on the
        harmonic set, stacked as (real-part, imag-part)."""
        n_c = self._n_c
        vals = self.wave.derivative_x(1, n_points=n_c)
        fr = np.fft.fft(vals.real) / n_c
        fi = np.fft.fft(vals.imag) / n_c
        sel = self._modes % n_c
        return np.concatenate([fr[sel], fi[sel]])


@dataclass
class BlochSpectrum:
    """Sampled eigenvalue curves over the Brillouin zone with the
    continued critical curve and stability verdict."""

    xi_samples: np.ndarray
    eigenvalues: np.ndarray  # shape (n_xi, 2*n_modes), sorted by -Re
    critical_curve: np.ndarray  # complex lambda_c per xi
    curvature: float
    fit_residual: float
    verdict: str
    max_re_nonzero: float
    gap_at_zero: float
    diagnostics: dict = field(default_factory=dict)


def eigen_with_left(mat: np.ndarray):
    """Eigen decomposition returning (values, right, left) with left
    vectors satisfying l^H A = lambda l^H."""
    vals, vl, vr = scipy.linalg.eig(mat, left=True, right=True)
    return vals, vr, vl


def _track_critical(op: LinearizedOperator, xis: np.ndarray):
    """Continue the eigenvalue branch through lambda_c(0) = 0 by maximal
    eigenvector overlap between adjacent xi samples."""
    order = np.argsort(xis)
    xis_sorted = xis[order]
    i_zero = int(np.argmin(np.abs(xis_sorted)))
    lam_c = np.empty(len(xis_sorted), dtype=complex)

    trans = op.translation_coeffs()
    norm = np.linalg.norm(trans)
    if norm > 1e-12:
        trans = trans / norm
    else:
        # constant profile: no translation mode; seed the continuation
        # with the eigenvector whose eigenvalue is closest to zero
        vals, vecs = np.linalg.eig(op.matrix(0.0))
        j = int(np.argmin(np.abs(vals)))
        trans = vecs[:, j] / np.linalg.norm(vecs[:, j])

    def step(indices):
        ref = trans
        for i in indices:
            mat = op.matrix(float(xis_sorted[i]))
            vals, vecs = np.linalg.eig(mat)
            overlaps = np.abs(ref.conj() @ vecs) / np.linalg.norm(vecs, axis=0)
            j = int(np.argmax(overlaps))
            lam_c[i] = vals[j]
            ref = vecs[:, j] / np.linalg.norm(vecs[:, j])

    step(range(i_zero, len(xis_sorted)))
    step(range(i_zero, -1, -1))
    out = np.empty_like(lam_c)
    out[order] = lam_c
    return out


def fit_curvature(
    xis: np.ndarray, lam_c: np.ndarray, window: float
) -> tuple[float, float]:
    """Least-squares fit Re lambda_c = -d xi^2 - e xi^4 over |xi| <= window.

    Returns (d, relative fit residual)."""
    sel = np.abs(xis) <= window
    if np.count_nonzero(sel) < 4:
        raise FitQualityError(
            f"only {np.count_nonzero(sel)} xi-samples inside fit window {window}"
        )
    x = xis[sel]
    y = np.real(lam_c[sel])
    basis = np.column_stack([x**2, x**4])
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    resid = y - basis @ coef
    scale = float(np.max(np.abs(y))) or 1.0
    return float(-coef[0]), float(np.max(np.abs(resid)) / scale)


def assess_stability(
    op: LinearizedOperator,
    n_xi: int = 128,
    delta_gap: float = DEFAULT_DELTA_GAP,
    fit_window_fraction: float = DEFAULT_FIT_WINDOW_FRACTION,
    zero_tol: float = 1e-8,
) -> BlochSpectrum:
    """Sample the Bloch spectrum over the Brillouin zone and apply the
    three-clause diffusive-stability check:

    (i)  max Re lambda(xi) < 0 for every sampled xi != 0,
    (ii) at xi = 0 the only eigenvalue with Re >= -delta_gap is the
         simple translational zero,
    (iii) the critical curve has positive fitted curvature.
    """
    if n_xi < 16:
        raise ParameterError("n_xi must be >= 16")
    k = op.k
    xis = np.linspace(-np.pi * k, np.pi * k, n_xi, endpoint=False)
    # ensure xi = 0 is on the grid
    xis = xis - xis[np.argmin(np.abs(xis))]
    all_eigs = np.empty((len(xis), 2 * op.size), dtype=complex)
    for i, xi in enumerate(xis):
        vals = np.linalg.eigvals(op.matrix(float(xi)))
        all_eigs[i] = vals[np.argsort(-vals.real)]

    lam_c = _track_critical(op, xis)
    i_zero = int(np.argmin(np.abs(xis)))
    gap_at_zero = abs(lam_c[i_zero])

    nonzero = np.abs(xis) > 1e-14
    max_re_nonzero = float(np.max(all_eigs[nonzero].real)) if nonzero.any() else 0.0

    # simplicity at xi = 0: count eigenvalues above the gap line
    zero_eigs = all_eigs[i_zero]
    n_above = int(np.count_nonzero(zero_eigs.real >= -delta_gap))

    dxi = 2.0 * np.pi * k / len(xis)
    window = max(fit_window_fraction * k, 4.5 * dxi)
    try:
        d, fit_resid = fit_curvature(xis, lam_c, window)
    except FitQualityError:
        d, fit_resid = float("nan"), float("inf")

    marginal = False
    if gap_at_zero > zero_tol:
        marginal = True
    stable = (
        max_re_nonzero < 0.0
        and gap_at_zero <= zero_tol
        and n_above == 1
        and np.isfinite(d)
        and d > 0.0
    )
    if stable and (max_re_nonzero > -1e-12 or d < 1e-12):
        marginal = True
    if stable and not marginal:
        verdict = "stable"
    elif stable:
        verdict = "marginal"
    else:
        verdict = "unstable" if (max_re_nonzero >= 0.0 or n_above > 1) else "marginal"

    return BlochSpectrum(
        xi_samples=xis,
        eigenvalues=all_eigs,
        critical_curve=lam_c,
        curvature=d,
        fit_residual=fit_resid,
        verdict=verdict,
        max_re_nonzero=max_re_nonzero,
        gap_at_zero=gap_at_zero,
        diagnostics={"n_above_gap_at_zero": n_above, "delta_gap": delta_gap},
    )


def bloch_mode_on_grid(
    op: LinearizedOperator,
    n_periods: int,
    points_per_period: int,
    sector: int,
    rank: int = 0,
):
    """Real-form grid field of one Bloch eigenmode on a domain of
    n_periods wave periods sampled at points_per_period, with its
    eigenvalue.

    sector indexes the Floquet exponent xi = 2*pi*sector/(n_periods*X);
    rank orders eigenvalues at that xi by decreasing real part.
    """
    if points_per_period <= op.size:
        raise ParameterError("points_per_period must exceed the harmonic count")
    n = n_periods * points_per_period
    length = n_periods / op.k
    xi = 2.0 * np.pi * sector / length
    vals, vecs = np.linalg.eig(op.matrix(xi))
    order = np.argsort(-vals.real)
    lam = vals[order[rank]]
    vec = vecs[:, order[rank]]
    wr_hat = np.zeros(n, dtype=complex)
    wi_hat = np.zeros(n, dtype=complex)
    for i, m in enumerate(op.harmonics.astype(int)):
        idx = (m * n_periods + sector) % n
        wr_hat[idx] = vec[i] * n
        wi_hat[idx] = vec[op.size + i] * n
    field = 2.0 * np.fft.ifft(wr_hat).real + 2j * np.fft.ifft(wi_hat).real
    return field, lam


def high_freq_rate(spectrum: BlochSpectrum, low_cut: float) -> float:
    """Exponential decay rate of the non-critical part of the spectrum:
    -max Re over all eigenvalues, excluding the critical curve for
    |xi| < low_cut.  Positive for a stable spectrum."""
    if spectrum.verdict != "stable":
        raise StabilityError(f"spectrum verdict is {spectrum.verdict!r}, not stable")
    worst = -np.inf
    for i, xi in enumerate(spectrum.xi_samples):
        eigs = spectrum.eigenvalues[i]
        if abs(xi) < low_cut:
            # drop the eigenvalue matching the critical curve
            j = int(np.argmin(np.abs(eigs - spectrum.critical_curve[i])))
            eigs = np.delete(eigs, j)
        worst = max(worst, float(np.max(eigs.real)))
    return -worst


def whitham_diffusion(
    wave: PeriodicWave,
    xi_fit: float | None = None,
    n_modes: int = 64,
    n_fit: int = 17,
    fit_residual_tol: float = 1e-2,
    spectrum: BlochSpectrum | None = None,
) -> float:
    """Effective diffusion coefficient of the critical Bloch curve:
    the d > 0 with lambda_c(xi) = -d xi^2 + O(xi^3), from a dedicated
    quadratic fit over |xi| <= xi_fit (default 0.1*k).

    This coefficient governs the quadratic heat-flow approximant of the
    wavenumber modulation; with the base wave normalized to period one
    it coincides with the product of wavenumber and the family's
    curvature coefficient.
    """
    if xi_fit is None:
        xi_fit = DEFAULT_FIT_WINDOW_FRACTION * wave.k
    if spectrum is None:
        op = LinearizedOperator(wave, n_modes=n_modes)
        spectrum = assess_stability(op, n_xi=64)
    if spectrum.verdict != "stable":
        raise StabilityError(
            f"wave is not diffusively stable (verdict {spectrum.verdict!r})"
        )
    op = LinearizedOperator(wave, n_modes=n_modes)
    xis = np.linspace(-xi_fit, xi_fit, n_fit)
    lam_c = _track_critical(op, xis)
    d, resid = fit_curvature(xis, lam_c, xi_fit)
    if resid > fit_residual_tol:
        raise FitQualityError(
            f"critical-curve quadratic fit residual {resid:.3e} exceeds "
            f"{fit_residual_tol:.3e}"
        )
    if d <= 0:
        raise StabilityError(f"fitted curvature d = {d:.3e} is not positive")
    return d
