"""Heat-flow approximant of the wavenumber modulation and decay-rate
comparisons against extracted phases.

Small modulations of a diffusively stable wave train have local
wavenumber deviation k = k_star * gamma_x governed, at quadratic order,
by a pure heat equation whose diffusion coefficient is the curvature of
the critical Bloch curve.  This module evolves that approximant exactly
in Fourier space, build the antiderivative profile h (the phase the
heat flow predicts), fits power-law decay exponents of norm time
series, and assembles the comparison reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.interpolate

from .evolve import Trajectory
from .exceptions import ExtrapolationError, FitError, ParameterError
from .grid import Grid, derivative, l2_norm, lp_norm
from .modulation import PhaseField, compose_shift
from .waves import PeriodicWave

DEFAULT_ETA = 0.1
DEFAULT_T_MIN = 10.0
DEFAULT_EXPONENT_TOL = 0.15


@dataclass
class WhithamRun:
    """Exact heat-flow evolution of a wavenumber deviation field.

    h is the antiderivative profile with h_x = k / k_star, pinned to the
    reference value at the left domain edge.
    """

    grid: Grid
    k_star: float
    diffusion: float
    times: np.ndarray
    k_fields: np.ndarray  # (n_times, n_points)
    h_fields: np.ndarray  # (n_times, n_points)

    def mass(self) -> np.ndarray:
        """Integral of k over the domain per time (conserved)."""
        return self.grid.spacing * self.k_fields.sum(axis=1)


def solve_heat(
    grid: Grid,
    k0: np.ndarray,
    diffusion: float,
    times: np.ndarray,
    k_star: float,
    h_left: float = 0.0,
) -> WhithamRun:
    """Evolve k_t = diffusion * k_xx from k0 at the requested times by
    the exact Fourier multiplier, and build h with h_x = k / k_star.

    The zero mode of k/k_star integrates to a linear ramp plus a
    constant fixed at t = 0 by h(left endpoint, 0) = h_left; for t > 0
    the constant is carried by the heat flow itself (mean-conserving),
    the periodic surrogate of anchoring the antiderivative at spatial
    infinity, which the diffusion never reaches.
    """
    if diffusion <= 0:
        raise ParameterError(f"diffusion must be positive, got {diffusion}")
    k0 = grid.validate(np.asarray(k0, dtype=float), "k0")
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ParameterError("times must be nonnegative")
    xi = grid.wavenumbers
    spec0 = np.fft.fft(k0)
    n_t = len(times)
    k_fields = np.empty((n_t, grid.n_points))
    h_fields = np.empty((n_t, grid.n_points))
    mean_slope = spec0[0].real / grid.n_points / k_star
    ramp = mean_slope * grid.x
    inv_ik = np.zeros_like(xi, dtype=complex)
    inv_ik[1:] = 1.0 / (1j * xi[1:])
    h_spec0 = spec0 * inv_ik / k_star
    h0_periodic = np.fft.ifft(h_spec0).real
    offset = h_left - (h0_periodic[0] + ramp[0])
    for i, t in enumerate(times):
        decay = np.exp(-diffusion * xi**2 * t)
        k_fields[i] = np.fft.ifft(spec0 * decay).real
        h_fields[i] = np.fft.ifft(h_spec0 * decay).real + ramp + offset
    return WhithamRun(
        grid=grid,
        k_star=k_star,
        diffusion=diffusion,
        times=times,
        k_fields=k_fields,
        h_fields=h_fields,
    )


@dataclass
class DecayFit:
    """Power-law fit of a norm time series: value ~ (1+t)^exponent."""

    name: str
    t_min: float
    n_points: int
    exponent: float
    stderr: float
    fit_residual: float
    predicted: float | None = None
    tolerance: float | None = None

    @property
    def verdict(self) -> bool | None:
        if self.predicted is None or self.tolerance is None:
            return None
        return abs(self.exponent - self.predicted) <= self.tolerance


def fit_decay(
    times: np.ndarray,
    values: np.ndarray,
    t_min: float = DEFAULT_T_MIN,
    predicted: float | None = None,
    tolerance: float | None = DEFAULT_EXPONENT_TOL,
    name: str = "",
) -> DecayFit:
    """Least-squares slope of log(value) against log(1 + t) beyond t_min.

    Requires positive values and at least one decade of usable times.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    sel = times >= t_min
    if np.count_nonzero(sel) < 4:
        raise FitError(f"only {np.count_nonzero(sel)} samples beyond t_min={t_min}")
    t = times[sel]
    v = values[sel]
    if np.any(v <= 0):
        raise FitError("series has non-positive values in the fit window")
    ratio = t[-1] / t[0] if t[0] > 0 else np.inf
    if ratio < 10.0:
        raise FitError(
            f"fit window [{t[0]:.3g}, {t[-1]:.3g}] spans less than one decade"
        )
    x = np.log(1.0 + t)
    y = np.log(v)
    coef, cov = np.polyfit(x, y, 1, cov=True)
    resid = y - np.polyval(coef, x)
    return DecayFit(
        name=name,
        t_min=t_min,
        n_points=len(t),
        exponent=float(coef[0]),
        stderr=float(np.sqrt(cov[0, 0])),
        fit_residual=float(np.sqrt(np.mean(resid**2))),
        predicted=predicted,
        tolerance=tolerance if predicted is not None else None,
    )


class WaveFamilyInterpolant:
    """Pointwise-in-phase cubic interpolation of wave profiles across a
    continued family in k, for evaluating locally modulated profiles."""

    def __init__(self, waves: list[PeriodicWave], points_per_period: int):
        if len(waves) < 4:
            raise ParameterError("family interpolation needs at least 4 waves")
        ks = np.array([w.k for w in waves])
        order = np.argsort(ks)
        self.ks = ks[order]
        if np.any(np.diff(self.ks) <= 0):
            raise ParameterError("family wavenumbers must be distinct")
        profiles = np.stack(
            [waves[i].derivative_x(0, n_points=points_per_period) for i in order]
        )
        self._spline = scipy.interpolate.CubicSpline(self.ks, profiles, axis=0)
        self.points_per_period = points_per_period

    @property
    def k_min(self) -> float:
        return float(self.ks[0])

    @property
    def k_max(self) -> float:
        return float(self.ks[-1])

    def profile_at(self, k: float) -> np.ndarray:
        """Interpolated unit-period profile at one wavenumber."""
        if not self.k_min <= k <= self.k_max:
            raise ExtrapolationError(
                f"k = {k} outside family range", k_min=self.k_min, k_max=self.k_max
            )
        return self._spline(k)

    def modulated_profile(self, grid: Grid, kappa: np.ndarray) -> np.ndarray:
        """phi^{kappa(x)} evaluated at the reference phase k_star * x,
        on a grid aligned with the unit-period sampling."""
        kappa = np.asarray(kappa, dtype=float)
        if kappa.min() < self.k_min or kappa.max() > self.k_max:
            raise ExtrapolationError(
                f"kappa range [{kappa.min():.6g}, {kappa.max():.6g}] outside "
                f"family range [{self.k_min:.6g}, {self.k_max:.6g}]",
                k_min=self.k_min,
                k_max=self.k_max,
            )
        npp = self.points_per_period
        if grid.n_points % npp:
            raise ParameterError("grid size must be a multiple of points_per_period")
        vals = self._spline(kappa)  # (n_points, npp)
        idx = np.arange(grid.n_points)
        return vals[idx, idx % npp]


@dataclass
class AsymptoticsReport:
    """Norm time series and decay fits for the three modulated-profile
    comparisons, plus the heat-field norms needed for rate gaps."""

    times: np.ndarray
    eta: float
    p_values: tuple
    series: dict  # (name, p) -> np.ndarray
    fits: dict  # (name, p) -> DecayFit
    k_star: float
    domain_length: float
    meta: dict = field(default_factory=dict)


def compare_asymptotics(
    traj: Trajectory,
    phases: list[PhaseField],
    wave: PeriodicWave,
    run: WhithamRun,
    eta: float = DEFAULT_ETA,
    family: WaveFamilyInterpolant | None = None,
    p_values: tuple = (2.0, np.inf),
    t_min: float = DEFAULT_T_MIN,
) -> AsymptoticsReport:
    """Build the three comparison series

      profile:    psi(Id + gamma) - phi^{kappa} at reference phase,
                  kappa = k_star (1 - gamma_x)
      wavenumber: k_star gamma_x - k(t)
      phase:      gamma - h(t)

    in L^p for each requested p, fit their decay, and also fit the decay
    of ||k(t)||_p itself for exponent-gap checks."""
    grid = traj.grid
    if len(phases) != len(traj.times):
        raise ParameterError("phase series must match trajectory snapshots")
    if len(run.times) != len(traj.times) or not np.allclose(run.times, traj.times):
        raise ParameterError("heat run must be sampled at the trajectory times")
    k_star = wave.k
    phi = wave.on_grid(grid)
    n_t = len(traj.times)
    series = {}
    for p in p_values:
        for name in ("profile", "wavenumber", "phase", "heat_k"):
            series[(name, p)] = np.empty(n_t)

    for i in range(n_t):
        gamma = phases[i].gamma
        gamma_x = phases[i].gamma_x
        psi_mod = compose_shift(grid, traj.states[i], gamma, "forward")
        if family is not None:
            kappa = k_star * (1.0 - gamma_x)
            prof = family.modulated_profile(grid, kappa)
        else:
            prof = phi
        d1 = psi_mod - prof
        d2 = k_star * gamma_x - run.k_fields[i]
        d3 = gamma - run.h_fields[i]
        for p in p_values:
            series[("profile", p)][i] = lp_norm(grid, d1, p)
            series[("wavenumber", p)][i] = lp_norm(grid, d2, p)
            series[("phase", p)][i] = lp_norm(grid, d3, p)
            series[("heat_k", p)][i] = lp_norm(grid, run.k_fields[i], p)

    fits = {}
    for p in p_values:
        inv_p = 0.0 if p == np.inf else 1.0 / p
        base = -0.5 * (1.0 - inv_p)
        predictions = {
            "profile": -0.75,
            "wavenumber": base - 0.5 + eta,
            "phase": base + eta,
            "heat_k": base,
        }
        for name in ("profile", "wavenumber", "phase", "heat_k"):
            try:
                fits[(name, p)] = fit_decay(
                    traj.times,
                    series[(name, p)],
                    t_min=t_min,
                    predicted=predictions[name],
                    name=f"{name}_p{p}",
                )
            except FitError as exc:
                fits[(name, p)] = exc
    return AsymptoticsReport(
        times=np.asarray(traj.times, dtype=float),
        eta=eta,
        p_values=tuple(p_values),
        series=series,
        fits=fits,
        k_star=k_star,
        domain_length=grid.length,
        meta={"used_family": family is not None},
    )


@dataclass
class RunSeries:
    """Norm time series of one perturbation run, used for the
    localized/nonlocalized contrast."""

    label: str
    times: np.ndarray
    norms: dict  # name -> np.ndarray
    domain_length: float
    e0: float


@dataclass
class ContrastReport:
    """Side-by-side fitted exponents for a localized and a nonlocalized
    run, with the domain-size growth diagnostic for the nonlocalized
    phase L2 norm."""

    fits_localized: dict
    fits_nonlocalized: dict
    gamma_l2_growth: float | None
    growth_domain_ratio: float | None
    meta: dict = field(default_factory=dict)


def localized_vs_nonlocalized(
    series_loc: RunSeries,
    series_nonloc: RunSeries,
    series_nonloc_big: RunSeries | None = None,
    t_min: float = DEFAULT_T_MIN,
    norms: tuple = ("v_l2", "gamma_x_l2", "gamma_l2", "gamma_linf"),
) -> ContrastReport:
    """Fit decay exponents of the key norms for both runs and, given a
    second nonlocalized run on a doubled domain, report the late-time
    growth factor of ||gamma||_L2 with domain size."""
    fits_loc = {}
    fits_non = {}
    for name in norms:
        for fits, rs in ((fits_loc, series_loc), (fits_non, series_nonloc)):
            try:
                fits[name] = fit_decay(rs.times, rs.norms[name], t_min=t_min, name=name)
            except FitError as exc:
                fits[name] = exc
    growth = None
    ratio = None
    if series_nonloc_big is not None:
        growth = float(
            series_nonloc_big.norms["gamma_l2"][-1] / series_nonloc.norms["gamma_l2"][-1]
        )
        ratio = float(series_nonloc_big.domain_length / series_nonloc.domain_length)
    return ContrastReport(
        fits_localized=fits_loc,
        fits_nonlocalized=fits_non,
        gamma_l2_growth=growth,
        growth_domain_ratio=ratio,
        meta={"t_min": t_min},
    )
