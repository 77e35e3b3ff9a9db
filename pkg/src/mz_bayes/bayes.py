"""Phase posteriors on the folded domain [0, pi/2] and their summaries.

Only |theta| is estimable with symmetric inputs, so every density here is the
distribution of |phi| under a flat prior. Products of likelihoods are built
in log-space; densities are normalized by midpoint quadrature on a uniform
grid.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegeneratePosteriorError, DomainError, UnreachableLevelError
from .interferometer import (
    HALF_PI,
    MeasurementRecord,
    TwinState,
    _check_theta,
    draw_outcomes,
    likelihood,
)
from .rotation import wigner_d_element_scaled

MIN_RESOLUTION = 1000


@dataclass(frozen=True)
class PhaseGrid:
    """Midpoint mesh phi_k = (k + 1/2) * (pi/2) / M on [0, pi/2]."""

    resolution: int

    def __post_init__(self):
        if self.resolution < MIN_RESOLUTION:
            raise DomainError(f"grid resolution must be >= {MIN_RESOLUTION}, got {self.resolution}")

    @property
    def spacing(self) -> float:
        return HALF_PI / self.resolution

    @cached_property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.resolution) + 0.5) * self.spacing

    @cached_property
    def edges(self) -> np.ndarray:
        return np.arange(self.resolution + 1) * self.spacing


def default_grid(two_j: int) -> PhaseGrid:
    # >= 100 nodes across the ~pi/N wide central peak
    return PhaseGrid(max(20000, 100 * two_j))


@dataclass(frozen=True)
class Posterior:
    grid: PhaseGrid
    density: np.ndarray
    log_density: np.ndarray

    @classmethod
    def from_log(cls, grid: PhaseGrid, log_weight: np.ndarray) -> "Posterior":
        """Normalize unnormalized log-weights on ``grid``."""
        log_weight = np.asarray(log_weight, dtype=float)
        peak = np.max(log_weight)
        if not np.isfinite(peak):
            raise DegeneratePosteriorError("all grid likelihoods vanish")
        mass = np.sum(np.exp(log_weight - peak)) * grid.spacing
        log_density = log_weight - (peak + math.log(mass))
        return cls(grid, np.exp(log_density), log_density)

    @classmethod
    def from_density(cls, grid: PhaseGrid, weight: np.ndarray) -> "Posterior":
        weight = np.asarray(weight, dtype=float)
        with np.errstate(divide="ignore"):
            return cls.from_log(grid, np.log(weight))

    @cached_property
    def cdf_at_edges(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.density) * self.grid.spacing))

    def cdf(self, phi):
        """Mass on [0, phi], linear between grid edges."""
        return np.interp(phi, self.grid.edges, self.cdf_at_edges)

    def total_mass(self) -> float:
        return float(self.cdf_at_edges[-1])


@dataclass(frozen=True)
class ConfidenceReport:
    phi_hat: float
    gamma: float
    half_width: float
    sigma: float


def _logsumexp_pair(m1, s1, m2, s2):
    """log|m1 e^s1 + m2 e^s2| for arrays of mantissas and log-scales."""
    top = np.maximum(s1, s2)
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        total = m1 * np.exp(s1 - top) + m2 * np.exp(s2 - top)
        return np.log(np.abs(total)) + top


def outcome_log_likelihood(state: TwinState, two_mu: int, phi: np.ndarray) -> np.ndarray:
    """log P(mu | j, phi) on an array of phases, exact far below underflow."""
    m1, s1 = wigner_d_element_scaled(state.two_j, two_mu, state.two_m, phi)
    with np.errstate(divide="ignore"):
        if state.two_m == 0:
            return 2.0 * (np.log(np.abs(m1)) + s1)
    m2, s2 = wigner_d_element_scaled(state.two_j, two_mu, -state.two_m, phi)
    return math.log(0.5) + 2.0 * _logsumexp_pair(m1, s1, m2, s2)


class _LikelihoodTable:
    """Per-outcome log-likelihood rows on a grid, computed on first use."""

    def __init__(self, state: TwinState, grid: PhaseGrid):
        self.state = state
        self.grid = grid
        self._rows: dict[int, np.ndarray] = {}

    def __getitem__(self, two_mu: int) -> np.ndarray:
        row = self._rows.get(two_mu)
        if row is None:
            row = outcome_log_likelihood(self.state, two_mu, self.grid.nodes)
            self._rows[two_mu] = row
        return row

    def record_log_weight(self, outcomes) -> np.ndarray:
        total = np.zeros(self.grid.resolution)
        for two_mu, count in Counter(outcomes).items():
            total = total + count * self[two_mu]
        return total


def posterior_from_record(record: MeasurementRecord, grid: PhaseGrid) -> Posterior:
    """Flat-prior posterior of |phi| given the outcomes in ``record``."""
    table = _LikelihoodTable(record.state, grid)
    return Posterior.from_log(grid, table.record_log_weight(record.outcomes))


def _mixture(grid: PhaseGrid, table: _LikelihoodTable, weighted_records) -> Posterior:
    """Average of normalized posteriors, weighted, then renormalized."""
    acc = np.zeros(grid.resolution)
    for outcomes, weight in weighted_records:
        acc += weight * Posterior.from_log(grid, table.record_log_weight(outcomes)).density
    return Posterior.from_density(grid, acc)


def averaged_posterior_exact_zero(state: TwinState, p: int, grid: PhaseGrid) -> Posterior:
    """Outcome-averaged posterior for p runs at true phase 0.

    At theta = 0 only mu = +m and mu = -m occur, each with probability 1/2
    (mu = 0 with certainty for m = 0). For integer m both outcomes give the
    same posterior, so the average is |d_{m,m} + d_{m,-m}|^{2p} normalized;
    for half-integer m the two differ and the binomial mixture is summed.
    """
    if p < 1:
        raise DomainError(f"p must be positive, got {p}")
    table = _LikelihoodTable(state, grid)
    if state.two_m % 2 == 0:
        return Posterior.from_log(grid, p * table[state.two_m])
    weighted = (
        ((state.two_m,) * k + (-state.two_m,) * (p - k), math.comb(p, k) / 2 ** p)
        for k in range(p + 1)
    )
    return _mixture(grid, table, weighted)


def averaged_posterior_mc(
    state: TwinState,
    theta: float,
    p: int,
    trials: int,
    seed: int,
    grid: PhaseGrid,
) -> Posterior:
    """Monte Carlo estimate of the outcome-averaged posterior at ``theta``.

    Draws ``trials`` records of p outcomes, averages their normalized
    posteriors. Records are order-free, so repeated multisets are evaluated
    once and weighted by their count.
    """
    if p < 1 or trials < 1:
        raise DomainError("p and trials must be positive")
    dist = likelihood(state, theta)
    rng = np.random.default_rng(seed)
    draws = np.sort(draw_outcomes(dist, (trials, p), rng), axis=1)
    records, counts = np.unique(draws, axis=0, return_counts=True)
    table = _LikelihoodTable(state, grid)
    weighted = ((tuple(int(x) for x in rec), c / trials) for rec, c in zip(records, counts))
    return _mixture(grid, table, weighted)


def averaged_posterior_enumerated(state: TwinState, theta: float, p: int, grid: PhaseGrid) -> Posterior:
    """Exhaustive sum over all (2j+1)**p outcome tuples; small j and p only."""
    if state.two_j > 10 or p > 3:
        raise DomainError("enumeration is limited to j <= 5 and p <= 3")
    _check_theta(theta)
    dist = likelihood(state, theta)
    table = _LikelihoodTable(state, grid)
    weighted = []
    for combo in itertools.product(range(state.two_j + 1), repeat=p):
        weight = float(np.prod(dist.probs[list(combo)]))
        if weight > 0.0:
            weighted.append((tuple(2 * i - state.two_j for i in combo), weight))
    return _mixture(grid, table, weighted)


def phase_estimate(post: Posterior) -> float:
    """MAP phase, refined by a parabola through log-density at the argmax.

    The density is the even extension about 0, so a maximum at the first
    node is a maximum at phi = 0. Ties go to the smaller phase.
    """
    k = int(np.argmax(post.density))
    if k == 0:
        return 0.0
    h = post.grid.spacing
    phi = float(post.grid.nodes[k])
    if k == post.grid.resolution - 1:
        return phi
    y0, y1, y2 = post.log_density[k - 1: k + 2]
    curvature = y0 - 2.0 * y1 + y2
    if not (np.isfinite(curvature) and curvature < 0.0):
        return phi
    offset = 0.5 * (y0 - y2) / curvature
    return float(np.clip(phi + offset * h, 0.0, HALF_PI))


def interval_mass(post: Posterior, phi_hat: float, c) -> np.ndarray:
    """Posterior mass of |phi| within ``c`` of ``phi_hat``."""
    c = np.asarray(c, dtype=float)
    return post.cdf(np.minimum(phi_hat + c, HALF_PI)) - post.cdf(np.maximum(phi_hat - c, 0.0))


def confidence_halfwidth(post: Posterior, phi_hat: float, gamma: float) -> float:
    """Smallest c such that [phi_hat - c, phi_hat + c] holds mass ``gamma``."""
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    if gamma > interval_mass(post, phi_hat, HALF_PI):
        raise UnreachableLevelError(f"level {gamma} exceeds total mass")
    lo, hi = 0.0, HALF_PI
    # the mass is monotone and piecewise linear in c
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if interval_mass(post, phi_hat, mid) >= gamma:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-16 * hi:
            break
    return hi


def posterior_sigma(post: Posterior, center: float) -> float:
    """Root-mean-square distance of |phi| from ``center``."""
    second = np.sum((post.grid.nodes - center) ** 2 * post.density) * post.grid.spacing
    return float(math.sqrt(second))


def confidence_report(post: Posterior, gamma: float) -> ConfidenceReport:
    phi_hat = phase_estimate(post)
    return ConfidenceReport(
        phi_hat=phi_hat,
        gamma=gamma,
        half_width=confidence_halfwidth(post, phi_hat, gamma),
        sigma=posterior_sigma(post, phi_hat),
    )
