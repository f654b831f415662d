"""Special functions and quadrature shared by the rest of the package.

Everything here is pure and stateless. Functions accept Python floats;
``binary_entropy`` additionally broadcasts over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

__all__ = [
    "QuadratureRule",
    "gauss_legendre",
    "binary_entropy",
    "bessel_i0",
    "lambert_w",
    "lambert_w_offset",
    "lambert_w_offset_shift",
    "integrate_theta",
    "DEFAULT_ORDER",
]

DEFAULT_ORDER = 64
_INV_E = math.exp(-1.0)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes and weights on [-1, 1]."""

    nodes: tuple[float, ...]
    weights: tuple[float, ...]
    order: int

    def __post_init__(self) -> None:
        if not (len(self.nodes) == len(self.weights) == self.order):
            raise ValueError("nodes, weights and order disagree in length")
        if self.order < 1:
            raise ValueError("order must be positive")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")
        if any(b <= a for a, b in zip(self.nodes, self.nodes[1:])):
            raise ValueError("nodes must be strictly increasing")
        if abs(math.fsum(self.weights) - 2.0) > 1e-12:
            raise ValueError("weights must sum to 2")

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.nodes)

    @property
    def w(self) -> np.ndarray:
        return np.asarray(self.weights)


@lru_cache(maxsize=16)
def gauss_legendre(order: int = DEFAULT_ORDER) -> QuadratureRule:
    """Return the ``order``-point Gauss-Legendre rule (cached)."""
    x, w = np.polynomial.legendre.leggauss(order)
    return QuadratureRule(tuple(float(v) for v in x), tuple(float(v) for v in w), order)


def binary_entropy(p):
    """Shannon binary entropy in bits, with 0 log 0 = 0.

    >>> binary_entropy(0.5)
    1.0
    >>> round(binary_entropy(0.11), 6)
    0.499916
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("binary_entropy needs p in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -arr * np.log2(arr) - (1.0 - arr) * np.log2(1.0 - arr)
    out = np.where((arr == 0.0) | (arr == 1.0), 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


# Power series is used below this argument. The asymptotic series has a
# relative floor near exp(-2x), so switching at x = 7 would cap accuracy
# around 1e-6; at 20 the floor is ~4e-18.
_I0_SWITCH = 20.0


def bessel_i0(x: float) -> float:
    """Modified Bessel function of the first kind, order zero.

    Overflows to ``inf`` for x above about 713.

    >>> bessel_i0(0.0)
    1.0
    >>> round(bessel_i0(1.0), 10)
    1.2660658778
    """
    x = float(x)
    if x < 0.0:
        x = -x  # even function
    if x < _I0_SWITCH:
        q = 0.25 * x * x
        term = 1.0
        total = 1.0
        k = 0
        while True:
            k += 1
            term *= q / (k * k)
            total += term
            if term < 1e-17 * total:
                return total
    # e^x / sqrt(2 pi x) * sum_k ((2k-1)!!)^2 / (k! (8x)^k)
    if x > 709.0:
        return math.inf
    term = 1.0
    total = 1.0
    for k in range(1, 40):
        nxt = term * (2 * k - 1) ** 2 / (k * 8.0 * x)
        if nxt > term:
            break
        term = nxt
        total += term
        if term < 1e-17 * total:
            break
    return math.exp(x) / math.sqrt(2.0 * math.pi * x) * total


def _halley_w(w: float, x: float) -> float:
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            return w
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0:
            return w
        step = f / denom
        w_new = w - step
        if abs(step) <= 4e-16 * (1.0 + abs(w_new)):
            return w_new
        w = w_new
    return w


def lambert_w(branch: int, x: float) -> float:
    """Real branches 0 and -1 of the Lambert W function.

    >>> lambert_w(0, 0.0)
    0.0
    >>> round(lambert_w(0, 1.0), 10)
    0.5671432904
    """
    x = float(x)
    if branch not in (0, -1):
        raise ValueError("branch must be 0 or -1")
    if math.isnan(x) or x < -_INV_E - 1e-16:
        raise ValueError("x below the branch point -1/e")
    if branch == -1 and x >= 0.0:
        raise ValueError("branch -1 needs -1/e <= x < 0")
    if x == 0.0:
        return 0.0
    if x <= -_INV_E:
        return -1.0
    if branch == 0 and math.isinf(x):
        return math.inf

    r = 2.0 * (math.e * x + 1.0)
    if x < -0.25:
        p = math.sqrt(max(r, 0.0))
        if branch == -1:
            p = -p
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
        if abs(p) < 1e-4:
            return w
    elif branch == 0:
        if x < 3.0:
            w = math.log1p(x)
        else:
            l1 = math.log(x)
            l2 = math.log(l1)
            w = l1 - l2 + l2 / l1
    else:
        l1 = math.log(-x)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1
    return _halley_w(w, x)


def lambert_w_offset(branch: int, kappa: float) -> float:
    """Return W_branch(-exp(-1 - kappa)) for kappa >= 0.

    Arguments near -1/e lose most of their information once exponentiated,
    and large kappa underflows, so the root is found from
    ``s - 1 - ln s = kappa`` with ``W = -s`` instead.
    """
    y = lambert_w_offset_shift(branch, kappa)
    if branch == 0 and kappa > 1e-2:
        return -math.exp(_log_s_lower(kappa))
    return -(1.0 + y)


def lambert_w_offset_shift(branch: int, kappa: float) -> float:
    """Return ``-1 - W_branch(-exp(-1 - kappa))`` without cancellation.

    Negative on branch 0, positive on branch -1.
    """
    kappa = float(kappa)
    if branch not in (0, -1):
        raise ValueError("branch must be 0 or -1")
    if not kappa >= 0.0:
        raise ValueError("kappa must be non-negative")
    if kappa == 0.0:
        return 0.0
    if kappa <= 1e-2:
        return _offset_solve(branch, kappa)
    if branch == 0:
        return math.expm1(_log_s_lower(kappa))
    return _s_upper(kappa) - 1.0


def _log_s_lower(kappa: float) -> float:
    """ln s for the root s < 1 of ``s - 1 - ln s = kappa`` (Newton in ln s)."""
    target = 1.0 + kappa
    u = -target if kappa > 1.0 else -math.sqrt(2.0 * kappa)
    for _ in range(100):
        eu = math.exp(u)
        f = eu - u - target
        step = f / (eu - 1.0)
        u_new = u - step
        if abs(step) <= 4e-16 * (1.0 + abs(u_new)):
            return u_new
        u = u_new
    return u


def _s_upper(kappa: float) -> float:
    """Root s > 1 of ``s - 1 - ln s = kappa`` (Newton in s)."""
    target = 1.0 + kappa
    s = target + math.log(target)
    for _ in range(100):
        f = s - math.log(s) - target
        step = f / (1.0 - 1.0 / s)
        s_new = s - step
        if abs(step) <= 4e-16 * s_new:
            return s_new
        s = s_new
    return s


def _y_minus_log1p(y: float) -> float:
    """``y - log1p(y)``; a series for small |y| avoids cancellation."""
    if abs(y) >= 1e-2:
        return y - math.log1p(y)
    total = 0.0
    power = y * y
    for k in range(2, 16):
        total += power / k if k % 2 == 0 else -power / k
        power *= y
    return total


def _offset_solve(branch: int, kappa: float) -> float:
    """Solve ``y - log1p(y) = kappa`` on the branch's side of zero; return y."""
    t = math.sqrt(2.0 * kappa)
    if branch == 0:
        t = -t
    y = t + t * t / 3.0 + t ** 3 / 36.0
    for _ in range(50):
        g = _y_minus_log1p(y) - kappa
        g1 = y / (1.0 + y)
        g2 = 1.0 / (1.0 + y) ** 2
        step = g / (g1 - 0.5 * g * g2 / g1)
        y_new = y - step
        if abs(step) <= 1e-17 + 4e-16 * abs(y_new):
            return y_new
        y = y_new
    return y


def integrate_theta(
    f: Callable[[np.ndarray], np.ndarray],
    half_width: float,
    rule: QuadratureRule | None = None,
) -> float:
    """Mean of ``f`` under a uniform density on [-half_width, half_width].

    ``f`` is called once with the full array of mapped nodes. A zero half
    width degenerates to ``f(0)``.
    """
    if rule is None:
        rule = gauss_legendre(DEFAULT_ORDER)
    if half_width < 0:
        raise ValueError("half_width must be non-negative")
    if half_width == 0.0:
        return float(np.asarray(f(np.zeros(1)))[0])
    vals = np.asarray(f(half_width * rule.x), dtype=float)
    return 0.5 * float(np.dot(rule.w, vals))
