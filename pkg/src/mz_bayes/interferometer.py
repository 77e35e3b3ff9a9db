"""Symmetric two-mode input states and Mach-Zehnder output statistics.

The input (|j+m>|j-m> + |j-m>|j+m>)/sqrt(2) is rotated by exp(-i theta J_y);
the probability of detecting relative count mu = (N1 - N2)/2 is

    P(mu | j, theta) = 1/2 (d^j_{mu,m}(theta) + d^j_{mu,-m}(theta))**2

and, for m = 0 (the single-term twin-Fock input |j>|j>), d^j_{mu,0}(theta)**2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .rotation import check_index, wigner_d_column

HALF_PI = math.pi / 2


@dataclass(frozen=True)
class TwinState:
    """Input state with N = 2j particles and port imbalance 2m (m >= 0)."""

    two_j: int
    two_m: int

    def __post_init__(self):
        if self.two_j < 1:
            raise DomainError(f"need at least one particle, got two_j = {self.two_j}")
        if self.two_m < 0:
            raise DomainError("m is non-negative by convention")
        check_index(self.two_j, self.two_m, "m")

    @classmethod
    def twin_fock(cls, two_j: int) -> "TwinState":
        return cls(two_j, 0)

    @classmethod
    def twin_one(cls, two_j: int) -> "TwinState":
        if two_j % 2 or two_j < 2:
            raise DomainError(f"twin m=1 needs integer j >= 1, got j = {two_j}/2")
        return cls(two_j, 2)

    @classmethod
    def noon(cls, two_j: int) -> "TwinState":
        return cls(two_j, two_j)

    @classmethod
    def yurke(cls, two_j: int) -> "TwinState":
        if two_j % 2 == 0:
            raise DomainError(f"Yurke state needs half-integer j, got j = {two_j // 2}")
        return cls(two_j, 1)

    @property
    def j(self) -> Fraction:
        return Fraction(self.two_j, 2)

    @property
    def m(self) -> Fraction:
        return Fraction(self.two_m, 2)

    @property
    def n_particles(self) -> int:
        return self.two_j


@dataclass(frozen=True)
class OutcomeDistribution:
    two_j: int
    theta: float
    probs: np.ndarray

    @property
    def two_mu(self) -> np.ndarray:
        return np.arange(-self.two_j, self.two_j + 1, 2)

    def prob(self, two_mu: int) -> float:
        check_index(self.two_j, two_mu, "mu")
        return float(self.probs[(two_mu + self.two_j) // 2])


@dataclass(frozen=True)
class MeasurementRecord:
    """Outcomes (as 2*mu) of p independent runs on the same state."""

    state: TwinState
    theta_true: float
    outcomes: tuple[int, ...]

    def __post_init__(self):
        if len(self.outcomes) < 1:
            raise DomainError("a record needs at least one outcome")
        for two_mu in self.outcomes:
            check_index(self.state.two_j, two_mu, "mu")

    @property
    def p(self) -> int:
        return len(self.outcomes)


def _check_theta(theta: float) -> None:
    if not 0.0 <= theta <= HALF_PI:
        raise DomainError(f"theta must lie in [0, pi/2], got {theta}")


def likelihood(state: TwinState, theta: float) -> OutcomeDistribution:
    """Exact output distribution P(mu | j, theta) for mu = -j..j."""
    _check_theta(theta)
    plus = wigner_d_column(state.two_j, state.two_m, theta).values
    if state.two_m == 0:
        probs = plus ** 2
    else:
        minus = wigner_d_column(state.two_j, -state.two_m, theta).values
        probs = 0.5 * (plus + minus) ** 2
    return OutcomeDistribution(state.two_j, theta, probs)


def _inverse_cdf(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, len(probs) - 1)


def draw_outcomes(dist: OutcomeDistribution, size, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws of 2*mu from ``dist`` with an existing generator."""
    idx = _inverse_cdf(dist.probs, rng.random(size))
    return 2 * idx - dist.two_j


def sample_outcomes(state: TwinState, theta: float, p: int, seed: int) -> MeasurementRecord:
    """p independent detections at phase ``theta``; deterministic in ``seed``."""
    if p < 1:
        raise DomainError(f"p must be positive, got {p}")
    dist = likelihood(state, theta)
    rng = np.random.default_rng(seed)
    outcomes = draw_outcomes(dist, p, rng)
    return MeasurementRecord(state, theta, tuple(int(x) for x in outcomes))
