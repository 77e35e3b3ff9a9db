"""Wigner small-d elements of the y-rotation exp(-i theta J_y).

Angular momenta are passed doubled (``two_j``, ``two_mu``, ``two_nu``) so
half-integer spins stay exact. The convention is

    d^j_{mu,nu}(theta) = <j, mu| exp(-i theta J_y) |j, nu>

with J_y = (a^dag b - a b^dag) / 2i and |j, mu> = |j+mu>_a |j-mu>_b, which is
the usual Condon-Shortley choice: d^{1/2} = [[cos, -sin], [sin, cos]] of
theta/2 in the (+1/2, -1/2) ordering. :func:`brute_force_rotation` is the
ground truth for that convention.

Two evaluators are provided:

* :func:`wigner_d_column` returns one full column nu for one angle, using a
  three-term recurrence in mu run inwards from both edges and matched in the
  classically allowed band.
* :func:`wigner_d_element` returns a single (mu, nu) element on an array of
  angles, using the three-term recurrence in j (Jacobi polynomial recurrence),
  carried as mantissa plus log-scale so nothing overflows or underflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, OracleSizeError

ORACLE_MAX_TWO_J = 60
FLUSH_BELOW = 1e-300

_RESCALE_HI = 1e150
_RESCALE_LO = 1e-150


@dataclass(frozen=True)
class DColumn:
    """Column nu of the spin-j rotation matrix, indexed by mu = -j..j."""

    two_j: int
    two_nu: int
    theta: float
    values: np.ndarray

    @property
    def two_mu(self) -> np.ndarray:
        return np.arange(-self.two_j, self.two_j + 1, 2)

    def __getitem__(self, two_mu: int) -> float:
        return float(self.values[(two_mu + self.two_j) // 2])


def check_index(two_j: int, two_nu: int, name: str = "nu") -> None:
    if two_j < 0:
        raise DomainError(f"two_j must be non-negative, got {two_j}")
    if abs(two_nu) > two_j:
        raise DomainError(f"|{name}| = {abs(two_nu)}/2 exceeds j = {two_j}/2")
    if (two_j - two_nu) % 2:
        raise DomainError(f"2*{name} = {two_nu} has the wrong parity for 2j = {two_j}")


def _log_binom(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _reduce_angle(theta):
    """Map theta onto [0, pi].

    Returns ``(reduced, global_sign, flip)``; the element at the original
    angle is ``global_sign * (-1)**((mu - nu) * flip) * d(reduced)``.
    """
    theta = np.asarray(theta, dtype=float)
    turns = np.floor(theta / (2 * np.pi))
    t = theta - 2 * np.pi * turns
    flip = t > np.pi
    # d(theta + 2 pi) = (-1)^{2j} d(theta); the sign is applied by the caller.
    t = np.where(flip, 2 * np.pi - t, t)
    return t, turns + flip, flip


def jy_matrix(two_j: int) -> np.ndarray:
    """Dense J_y (complex Hermitian) in the |j, mu> basis, mu ascending."""
    n_a = np.arange(two_j + 1)  # j + mu
    n_b = two_j - n_a           # j - mu
    # a^dag b |n_a, n_b> = sqrt((n_a + 1) n_b) |n_a + 1, n_b - 1>
    raise_ab = np.diag(np.sqrt((n_a[:-1] + 1.0) * n_b[:-1]), k=-1)
    return (raise_ab - raise_ab.T) / 2j


def brute_force_rotation(two_j: int, theta: float) -> np.ndarray:
    """Full rotation matrix exp(-i theta J_y) by dense matrix exponential.

    Rows and columns run over mu = -j..j. Only meant as an oracle.
    """
    if two_j < 0:
        raise DomainError(f"two_j must be non-negative, got {two_j}")
    if two_j > ORACLE_MAX_TWO_J:
        raise OracleSizeError(f"oracle limited to two_j <= {ORACLE_MAX_TWO_J}, got {two_j}")
    generator = -1j * theta * jy_matrix(two_j)
    # -i theta J_y is real antisymmetric, so the exponential is real.
    return expm(generator.real)


def _edge_log_seed(two_j0: int, two_mu: int, two_nu: int, theta):
    """log|d^{j0}_{mu,nu}| and its sign when j0 = max(|mu|, |nu|)."""
    theta = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore"):
        log_c = np.log(np.cos(theta / 2))
        log_s = np.log(np.sin(theta / 2))

    def powers(a: int, b: int):
        # a * log_c + b * log_s with 0 * log(0) = 0
        out = np.zeros_like(theta)
        if a:
            out = out + a * log_c
        if b:
            out = out + b * log_s
        return out

    if abs(two_mu) == two_j0:
        k = (two_j0 + two_nu) // 2
        log_norm = 0.5 * _log_binom(two_j0, k)
        if two_mu > 0:
            # d_{j,nu} = (-1)^{j-nu} sqrt(C(2j, j+nu)) c^{j+nu} s^{j-nu}
            sign = -1.0 if ((two_j0 - two_nu) // 2) % 2 else 1.0
            return log_norm + powers(k, two_j0 - k), sign
        # d_{-j,nu} = sqrt(C(2j, j+nu)) c^{j-nu} s^{j+nu}
        return log_norm + powers(two_j0 - k, k), 1.0
    k = (two_j0 + two_mu) // 2
    log_norm = 0.5 * _log_binom(two_j0, k)
    if two_nu > 0:
        # d_{mu,j} = sqrt(C(2j, j+mu)) c^{j+mu} s^{j-mu}
        return log_norm + powers(k, two_j0 - k), 1.0
    # d_{mu,-j} = (-1)^{j+mu} sqrt(C(2j, j+mu)) c^{j-mu} s^{j+mu}
    sign = -1.0 if ((two_j0 + two_mu) // 2) % 2 else 1.0
    return log_norm + powers(two_j0 - k, k), sign


def wigner_d_element_scaled(two_j: int, two_mu: int, two_nu: int, theta):
    """Element d^j_{mu,nu} on an array of angles as ``(mantissa, log_scale)``.

    The value is ``mantissa * exp(log_scale)``; zeros have mantissa 0.
    """
    check_index(two_j, two_mu, "mu")
    check_index(two_j, two_nu, "nu")
    theta, sign_turns, flip = _reduce_angle(theta)
    scalar = theta.ndim == 0
    theta = np.atleast_1d(theta)

    two_j0 = max(abs(two_mu), abs(two_nu))
    log_seed, sign = _edge_log_seed(two_j0, two_mu, two_nu, theta)
    finite = np.isfinite(log_seed)
    cur = np.where(finite, sign, 0.0)
    log_scale = np.where(finite, log_seed, 0.0)
    prev = np.zeros_like(cur)

    x = np.cos(theta)
    mu, nu = two_mu / 2, two_nu / 2
    for two_jj in range(two_j0 + 2, two_j + 1, 2):
        jj = two_jj / 2
        a = jj * (2 * jj - 1) / math.sqrt((jj * jj - mu * mu) * (jj * jj - nu * nu))
        shift = mu * nu / (jj * (jj - 1)) if mu * nu else 0.0
        back = (jj - 1) ** 2
        b = 0.0
        if two_jj - 2 > two_j0:
            b = math.sqrt((back - mu * mu) * (back - nu * nu)) / ((jj - 1) * (2 * jj - 1))
        nxt = a * ((x - shift) * cur - b * prev)
        prev, cur = cur, nxt
        size = np.maximum(np.abs(cur), np.abs(prev))
        rescale = (size > _RESCALE_HI) | ((size < _RESCALE_LO) & (size > 0))
        if rescale.any():
            s = np.where(rescale, size, 1.0)
            cur = cur / s
            prev = prev / s
            log_scale = log_scale + np.log(s)

    parity = np.where(sign_turns % 2 == 1, -1.0 if two_j % 2 else 1.0, 1.0)
    if ((two_mu - two_nu) // 2) % 2:
        parity = np.where(flip, -parity, parity)
    cur = cur * parity
    if scalar:
        return cur[0], log_scale[0]
    return cur, log_scale


def wigner_d_element(two_j: int, two_mu: int, two_nu: int, theta):
    """Element d^j_{mu,nu}(theta), vectorized over theta."""
    mantissa, log_scale = wigner_d_element_scaled(two_j, two_mu, two_nu, theta)
    with np.errstate(over="ignore", under="ignore"):
        value = mantissa * np.exp(log_scale)
    return np.where(np.abs(value) < FLUSH_BELOW, 0.0, value)


def _recur_outward(two_j: int, two_nu: int, theta: float, stop: int, forward: bool) -> np.ndarray:
    """Run the mu-recurrence from one edge to index ``stop`` (inclusive).

    Returns an unnormalized array over indices 0..2j with entries only on the
    covered side; the seed is +1 at mu=-j or the exact sign of d_{j,nu}.
    """
    j = two_j / 2
    nu = two_nu / 2
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    jj1 = j * (j + 1)
    out = np.zeros(two_j + 1)
    if forward:
        out[0] = 1.0
        for i in range(0, stop):
            mu = i - j
            diag = 2.0 * (nu - mu * cos_t) / sin_t
            lower = math.sqrt(jj1 - mu * (mu - 1)) * out[i - 1] if i > 0 else 0.0
            out[i + 1] = (diag * out[i] - lower) / math.sqrt(jj1 - mu * (mu + 1))
            if abs(out[i + 1]) > _RESCALE_HI:
                out[: i + 2] /= abs(out[i + 1])
    else:
        out[two_j] = -1.0 if ((two_j - two_nu) // 2) % 2 else 1.0
        for i in range(two_j, stop, -1):
            mu = i - j
            diag = 2.0 * (nu - mu * cos_t) / sin_t
            upper = math.sqrt(jj1 - mu * (mu + 1)) * out[i + 1] if i < two_j else 0.0
            out[i - 1] = (diag * out[i] - upper) / math.sqrt(jj1 - mu * (mu - 1))
            if abs(out[i - 1]) > _RESCALE_HI:
                out[i - 1:] /= abs(out[i - 1])
    return out


def wigner_d_column(two_j: int, two_nu: int, theta: float) -> DColumn:
    """All elements d^j_{mu,nu}(theta), mu = -j..j, for one column nu.

    The rotated state is an eigenvector of cos(theta) J_z + sin(theta) J_x,
    which gives a three-term recurrence in mu. It is run from mu=-j upwards
    and from mu=+j downwards, both growing into the classically allowed band
    around mu = nu cos(theta), and the two halves are matched there by least
    squares over two overlapping entries. The column is normalized last.
    """
    check_index(two_j, two_nu)
    theta = float(theta)
    reduced, turns, flip = _reduce_angle(theta)
    reduced = float(reduced)
    mus = np.arange(-two_j, two_j + 1, 2)
    values = np.zeros(two_j + 1)
    sin_t = math.sin(reduced)

    if two_j == 0:
        values[0] = 1.0
    elif sin_t < 1e-300:
        if reduced < 1.0:
            values[(two_nu + two_j) // 2] = 1.0
        else:
            # d_{mu,nu}(pi) = (-1)^{j-nu} delta_{mu,-nu}
            values[(two_j - two_nu) // 2] = -1.0 if ((two_j - two_nu) // 2) % 2 else 1.0
    else:
        centre = two_nu / 2 * math.cos(reduced) + two_j / 2
        match = min(max(int(round(centre)), 0), two_j - 1)
        left = _recur_outward(two_j, two_nu, reduced, match + 1, forward=True)
        right = _recur_outward(two_j, two_nu, reduced, match, forward=False)
        overlap = slice(match, match + 2)
        scale = np.dot(left[overlap], right[overlap]) / np.dot(right[overlap], right[overlap])
        values[: match + 1] = left[: match + 1]
        values[match + 1:] = scale * right[match + 1:]
        values /= np.linalg.norm(values)

    values[np.abs(values) < FLUSH_BELOW] = 0.0
    if turns % 2 == 1 and two_j % 2:
        values = -values
    if flip:
        values = values * np.where(((mus - two_nu) // 2) % 2 == 1, -1.0, 1.0)
    return DColumn(two_j, two_nu, theta, values)


def legendre_column(two_j: int, theta: float) -> DColumn:
    """The nu=0 column, whose squares are the associated Legendre weights.

    values[mu]**2 == (j-mu)!/(j+mu)! * P_j^mu(cos theta)**2 for integer j.
    """
    if two_j % 2:
        raise DomainError(f"Legendre column needs integer j, got j = {two_j}/2")
    return wigner_d_column(two_j, 0, theta)
