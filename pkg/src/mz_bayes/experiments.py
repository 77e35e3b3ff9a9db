"""Scaling studies: confidence versus p, uncertainty versus N_T, Cramer-Rao
saturation and the odd-m tail-cancellation diagnostic.

All studies run at true phase 0, where the outcome average is exact.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .bayes import (
    PhaseGrid,
    Posterior,
    averaged_posterior_exact_zero,
    confidence_halfwidth,
    default_grid,
    phase_estimate,
    posterior_sigma,
)
from .errors import DivisibilityError, DomainError, FitError
from .interferometer import HALF_PI, TwinState
from .rotation import wigner_d_element

FAMILIES = ("twin_fock", "twin_one", "noon", "yurke")

# Fig. 3 levels: sigma/2, sigma, 2 sigma, ... 5 sigma of a Gaussian
GAUSSIAN_LEVELS = (0.3829, 0.6827, 0.9545, 0.9973, 0.99994, 0.9999994)

FAR_TAIL_START = math.pi / 4


def default_workers() -> int:
    env = os.environ.get("MZ_BAYES_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _pmap(func: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items))


def make_state(family: str, n_per_run: int, two_m: int | None = None) -> TwinState:
    """State with ``n_per_run`` particles; ``family`` may be 'general' with ``two_m``."""
    family = family.replace("-", "_")
    if family == "twin_fock":
        return TwinState.twin_fock(n_per_run)
    if family == "twin_one":
        return TwinState.twin_one(n_per_run)
    if family == "noon":
        return TwinState.noon(n_per_run)
    if family == "yurke":
        return TwinState.yurke(n_per_run)
    if family == "general":
        if two_m is None:
            raise DomainError("family 'general' needs two_m")
        return TwinState(n_per_run, two_m)
    raise DomainError(f"unknown state family {family!r}")


def admissible(family: str, n: int, two_m: int | None = None) -> bool:
    try:
        make_state(family, n, two_m)
    except DomainError:
        return False
    return True


def split_budget(family: str, n_total: int, p: int, rounding: str = "reject",
                 two_m: int | None = None) -> int:
    """Particles per run when ``n_total`` is shared by ``p`` runs.

    ``rounding='reject'`` demands an exact admissible split; ``'nearest'``
    takes the admissible N closest to n_total / p (the effective total is
    then p * N).
    """
    if p < 1 or n_total < 1:
        raise DomainError("n_total and p must be positive")
    if rounding == "reject":
        if n_total % p or not admissible(family, n_total // p, two_m):
            raise DivisibilityError(
                f"N_T = {n_total} does not split into {p} admissible runs for {family}")
        return n_total // p
    if rounding != "nearest":
        raise DomainError(f"unknown rounding policy {rounding!r}")
    target = n_total / p
    candidates = [n for n in range(max(1, math.floor(target) - 2), math.ceil(target) + 3)
                  if admissible(family, n, two_m)]
    if not candidates:
        raise DivisibilityError(f"no admissible particle number near {target}")
    return min(candidates, key=lambda n: (abs(n - target), n))


@dataclass(frozen=True)
class SweepSpec:
    family: str
    n_total: int = 2000
    p_values: tuple[int, ...] = ()
    n_values: tuple[int, ...] = ()
    gamma_levels: tuple[float, ...] = (0.6827,)
    theta_true: float = 0.0
    two_m: int | None = None
    rounding: str = "reject"
    grid_resolution: int | None = None

    def __post_init__(self):
        if self.theta_true != 0.0:
            raise DomainError("scaling studies use the exact theta = 0 path")
        for gamma in self.gamma_levels:
            if not 0.0 < gamma < 1.0:
                raise DomainError(f"gamma must lie in (0, 1), got {gamma}")

    def grid_for(self, two_j: int) -> PhaseGrid:
        if self.grid_resolution is None:
            return default_grid(two_j)
        return PhaseGrid(self.grid_resolution)


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    prefactor: float
    r_squared: float
    points: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class TailReport:
    two_j: int
    two_m: int
    tail_mass: float
    cancellation_residual: float
    lobe_edge: float


@dataclass
class ConfidenceSweep:
    rows: list[dict] = field(default_factory=list)
    argmin: dict[float, int] = field(default_factory=dict)


def fit_power_law(xs: Iterable[float], ys: Iterable[float]) -> ScalingFit:
    """Least-squares line through (log x, log y): y = prefactor * x**exponent."""
    xs = np.asarray(list(xs), dtype=float)
    ys = np.asarray(list(ys), dtype=float)
    if len(xs) < 3:
        raise FitError(f"need at least 3 points, got {len(xs)}")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise FitError("power-law fit needs positive data")
    lx, ly = np.log(xs), np.log(ys)
    exponent, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (exponent * lx + intercept)
    spread = np.sum((ly - ly.mean()) ** 2)
    r_squared = 1.0 - np.sum(resid ** 2) / spread if spread > 0 else 1.0
    return ScalingFit(
        exponent=float(exponent),
        prefactor=float(math.exp(intercept)),
        r_squared=float(min(max(r_squared, 0.0), 1.0)),
        points=tuple((int(x), float(y)) for x, y in zip(xs, ys)),
    )


def _zero_phase_posterior(args) -> Posterior:
    family, n, p, two_m, resolution = args
    state = make_state(family, n, two_m)
    grid = PhaseGrid(resolution) if resolution else default_grid(state.two_j)
    return averaged_posterior_exact_zero(state, p, grid)


def _confidence_point(args) -> list[float]:
    *key, gammas = args
    post = _zero_phase_posterior(key)
    phi_hat = phase_estimate(post)
    return [confidence_halfwidth(post, phi_hat, g) for g in gammas]


def _sigma_point(args) -> float:
    # sigma about the true phase, which is 0 here
    return posterior_sigma(_zero_phase_posterior(args), 0.0)


def confidence_vs_p(spec: SweepSpec, workers: int = 1) -> ConfidenceSweep:
    """Scaled half-width c_gamma * N_T for each (gamma, p) at fixed N_T.

    ``c_gamma_times_nt`` uses the effective total p * N, which equals N_T
    unless the SweepSpec asks for nearest rounding.
    """
    if not spec.p_values:
        raise DomainError("p-sweep needs p_values")
    splits = [split_budget(spec.family, spec.n_total, p, spec.rounding, spec.two_m)
              for p in spec.p_values]
    jobs = [(spec.family, n, p, spec.two_m, spec.grid_resolution, tuple(spec.gamma_levels))
            for p, n in zip(spec.p_values, splits)]
    widths = _pmap(_confidence_point, jobs, workers)
    sweep = ConfidenceSweep()
    for gi, gamma in enumerate(spec.gamma_levels):
        best = None
        for p, n, cs in zip(spec.p_values, splits, widths):
            scaled = cs[gi] * p * n
            sweep.rows.append({"gamma": gamma, "p": p, "n_per_run": n,
                               "c_gamma": cs[gi], "c_gamma_times_nt": scaled})
            if best is None or scaled < best[1]:
                best = (p, scaled)
        sweep.argmin[gamma] = best[0]
    return sweep


def uncertainty_vs_ntotal(spec: SweepSpec, p: int, metric: str = "confidence",
                          gamma: float | None = None, workers: int = 1) -> ScalingFit:
    """Fit Delta-theta = prefactor * N_T**exponent over ``spec.n_values``.

    ``metric`` is 'confidence' (half-width at ``gamma``) or 'sigma'
    (rms spread about the true phase 0).
    """
    n_values = tuple(spec.n_values)
    if len(n_values) < 3:
        raise FitError(f"need at least 3 points, got {len(n_values)}")
    if max(n_values) < 10 * min(n_values):
        raise DomainError("n_values must span at least one decade")
    splits = [split_budget(spec.family, nt, p, spec.rounding, spec.two_m) for nt in n_values]
    totals = [n * p for n in splits]
    if metric == "confidence":
        gamma = spec.gamma_levels[0] if gamma is None else gamma
        jobs = [(spec.family, n, p, spec.two_m, spec.grid_resolution, (gamma,)) for n in splits]
        values = [cs[0] for cs in _pmap(_confidence_point, jobs, workers)]
    elif metric == "sigma":
        jobs = [(spec.family, n, p, spec.two_m, spec.grid_resolution) for n in splits]
        values = _pmap(_sigma_point, jobs, workers)
    else:
        raise DomainError(f"unknown metric {metric!r}")
    return fit_power_law(totals, values)


def cramer_rao_saturation(family: str, n_per_run: int, p_values: Sequence[int],
                          grid_resolution: int | None = None, workers: int = 1) -> list[dict]:
    """sigma * N_T against 2 sqrt(p) at fixed particles per run.

    The 1/sqrt(p) law is only expected once p > 4; smaller p are flagged.
    """
    make_state(family, n_per_run)
    jobs = [(family, n_per_run, p, None, grid_resolution) for p in p_values]
    sigmas = _pmap(_sigma_point, jobs, workers)
    rows = []
    for p, sigma in zip(p_values, sigmas):
        n_total = p * n_per_run
        rows.append({
            "p": p,
            "n_per_run": n_per_run,
            "n_total": n_total,
            "sigma": sigma,
            "sigma_times_nt": sigma * n_total,
            "sigma_nt_over_sqrt_p": sigma * n_total / math.sqrt(p),
            "saturated": p > 4,
        })
    return rows


def _amplitude_sum(state: TwinState, phi: np.ndarray) -> np.ndarray:
    a = wigner_d_element(state.two_j, state.two_m, state.two_m, phi)
    return a + wigner_d_element(state.two_j, state.two_m, -state.two_m, phi)


def tail_cancellation_check(two_j: int, two_m_values: Sequence[int],
                            grid: PhaseGrid | None = None,
                            far_tail_start: float = FAR_TAIL_START) -> list[TailReport]:
    """Tail mass and interference residual of the p=1, theta=0 posterior.

    The central lobe ends at the first local minimum of the density right of
    the MAP node; ``tail_mass`` is the posterior mass beyond it. The residual
    is max |d_{m,m} + d_{m,-m}|**2 over [max(lobe edge, far_tail_start), pi/2],
    the far tail where odd m cancel to O((j - m)**-3).
    """
    grid = grid or default_grid(two_j)
    reports = []
    for two_m in two_m_values:
        state = TwinState(two_j, two_m)
        post = averaged_posterior_exact_zero(state, 1, grid)
        density = post.density
        k = int(np.argmax(density))
        # walk down the lobe to the first local minimum
        rising = np.nonzero(np.diff(density[k:]) > 0)[0]
        edge_idx = k + int(rising[0]) if rising.size else grid.resolution - 1
        lobe_edge = float(grid.nodes[edge_idx])
        tail_mass = max(0.0, 1.0 - float(post.cdf(lobe_edge)))

        start = max(lobe_edge, far_tail_start)
        far = grid.nodes[grid.nodes >= start]
        residual = float(np.max(_amplitude_sum(state, far) ** 2)) if far.size else 0.0
        reports.append(TailReport(two_j, two_m, min(tail_mass, 1.0), residual, lobe_edge))
    return reports


def tail_residual_slope(two_m: int, j_values: Sequence[int],
                        far_tail_start: float = FAR_TAIL_START) -> float:
    """Log-log slope of the far-tail residual against (j - m)."""
    residuals, distances = [], []
    for j in j_values:
        two_j = 2 * j if two_m % 2 == 0 else 2 * j + 1
        report = tail_cancellation_check(two_j, [two_m], far_tail_start=far_tail_start)[0]
        residuals.append(report.cancellation_residual)
        distances.append((two_j - two_m) / 2)
    slope, _ = np.polyfit(np.log(distances), np.log(residuals), 1)
    return float(slope)
