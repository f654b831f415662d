"""Intensity and selection-probability optimisation.

The search runs Nelder-Mead in an unconstrained space. The signal is
log-scaled inside its bounds, each decoy is a sigmoid fraction of the gap
between the vacuum and the next intensity up, and the probabilities are a
softmax. Every point of that space therefore maps to a valid
:class:`IntensitySet`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .asymptotic import AsymptoticBreakdown, ma_asymptotic, mdi_asymptotic
from .finite_key import DEFAULT_EPSILON, FiniteKeyResult, ma_finite, mdi_finite
from .params import (
    DEFAULT_VACUUM,
    MDI_REPETITION_RATE,
    IntensitySet,
    MemoryParams,
    SystemParams,
    repetition_rate,
)

__all__ = [
    "Objective",
    "OptimizationConfig",
    "OptimizationResult",
    "KeyRateResult",
    "optimize_rate",
    "evaluate",
    "block_size",
    "encode",
    "decode",
]

KeyRateResult = Union[AsymptoticBreakdown, FiniteKeyResult]


class Objective(str, Enum):
    MA_ASYMPTOTIC = "ma_asymptotic"
    MDI_ASYMPTOTIC = "mdi_asymptotic"
    MA_FINITE = "ma_finite"
    MDI_FINITE = "mdi_finite"

    @property
    def finite(self) -> bool:
        return self in (Objective.MA_FINITE, Objective.MDI_FINITE)

    @property
    def memory_assisted(self) -> bool:
        return self in (Objective.MA_ASYMPTOTIC, Objective.MA_FINITE)


@dataclass(frozen=True)
class OptimizationConfig:
    """Search budget and box.

    A seeded population of ``population`` random points is scored first and
    Nelder-Mead then refines the best ``restarts`` of them. With a warm
    start the smaller ``warm_population``/``warm_restarts`` pair is used.
    ``z_bounds`` limits the signal. Selection probabilities are kept at or
    above ``p_min``. ``tolerance`` is the relative rate change at which a
    restart stops.
    """

    max_evals: int = 400
    restarts: int = 8
    population: int = 48
    warm_restarts: int = 2
    warm_population: int = 12
    z_bounds: tuple[float, float] = (1e-3, 2.0)
    p_min: float = 1e-4
    v: float = DEFAULT_VACUUM
    seed: int = 0
    tolerance: float = 1e-4
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        lo, hi = self.z_bounds
        if not (0.0 < lo < hi):
            raise ValueError("z_bounds must satisfy 0 < lo < hi")
        if lo <= self.v:
            raise ValueError("lower z bound must exceed the vacuum intensity")
        if self.max_evals < 1 or min(self.restarts, self.warm_restarts) < 0:
            raise ValueError("max_evals must be positive and restarts non-negative")
        if min(self.population, self.warm_population) < 0:
            raise ValueError("population sizes must be non-negative")
        if not 0.0 <= self.p_min < 0.25:
            raise ValueError("p_min must lie in [0, 1/4)")


@dataclass
class OptimizationResult:
    intensities: IntensitySet
    result: KeyRateResult
    evaluations: int = 0
    x: np.ndarray | None = field(default=None, repr=False)

    @property
    def rate_bps(self) -> float:
        return self.result.rate_bps


def block_size(objective: Objective | str, params: SystemParams, memory: MemoryParams | None,
               N: float | None = None, T_col: float | None = None) -> float:
    """Number of rounds, either given or as ``R_s * T_col``."""
    objective = Objective(objective)
    if (N is None) == (T_col is None):
        raise ValueError("give exactly one of N and T_col")
    if N is not None:
        if not N > 0:
            raise ValueError("N must be positive")
        return float(N)
    if not T_col > 0:
        raise ValueError("T_col must be positive")
    rate = repetition_rate(params, memory) if objective.memory_assisted else MDI_REPETITION_RATE
    return rate * T_col


# ----------------------------------------------------------- parametrisation


_FRAC = 1e-6


def _sigmoid(x: float) -> float:
    """Logistic function kept inside ``[_FRAC, 1 - _FRAC]`` so orderings stay strict."""
    if x >= 0:
        s = 1.0 / (1.0 + math.exp(-x))
    else:
        e = math.exp(x)
        s = e / (1.0 + e)
    return min(max(s, _FRAC), 1.0 - _FRAC)


def _logit(p: float) -> float:
    p = min(max(p, 1e-12), 1.0 - 1e-12)
    return math.log(p / (1.0 - p))


def decode(x: np.ndarray, config: OptimizationConfig) -> IntensitySet:
    lo, hi = config.z_bounds
    v = config.v
    z = lo * (hi / lo) ** _sigmoid(x[0])
    w1 = v + (z - v) * _sigmoid(x[1])
    w2 = v + (w1 - v) * _sigmoid(x[2])
    logits = np.array([0.0, x[3], x[4], x[5]])
    e = np.exp(logits - logits.max())
    raw = e / e.sum()
    probs = config.p_min + (1.0 - 4.0 * config.p_min) * raw
    probs = probs / probs.sum()
    p_w1, p_w2, p_v = (float(p) for p in probs[1:])
    return IntensitySet(z=z, w1=w1, w2=w2, v=v, p_z=1.0 - p_w1 - p_w2 - p_v, p_w1=p_w1, p_w2=p_w2, p_v=p_v)


def encode(I: IntensitySet, config: OptimizationConfig) -> np.ndarray:
    lo, hi = config.z_bounds
    v = config.v
    z = min(max(I.z, lo * (1 + 1e-9)), hi * (1 - 1e-9))
    x0 = _logit(math.log(z / lo) / math.log(hi / lo))
    x1 = _logit((I.w1 - v) / (z - v))
    x2 = _logit((I.w2 - v) / (I.w1 - v))
    span = 1.0 - 4.0 * config.p_min
    raw = [max((p - config.p_min) / span, 1e-12) for p in I.probabilities]
    return np.array([x0, x1, x2] + [math.log(r / raw[0]) for r in raw[1:]])


# ----------------------------------------------------------------- objective


def evaluate(objective: Objective | str, params: SystemParams, memory: MemoryParams | None,
             I: IntensitySet, N: float | None = None, epsilon: float = DEFAULT_EPSILON) -> KeyRateResult:
    """Rate of one intensity choice under the given objective."""
    objective = Objective(objective)
    if objective is Objective.MA_ASYMPTOTIC:
        return ma_asymptotic(params, _need(memory), I.z)
    if objective is Objective.MDI_ASYMPTOTIC:
        return mdi_asymptotic(params, I.z)
    if N is None:
        raise ValueError("finite objectives need a block size")
    if objective is Objective.MA_FINITE:
        return ma_finite(params, _need(memory), I, N, epsilon=epsilon)
    return mdi_finite(params, I, N, epsilon=epsilon)


def _need(memory: MemoryParams | None) -> MemoryParams:
    if memory is None:
        raise ValueError("memory-assisted objectives need memory parameters")
    return memory


def _score(r: KeyRateResult) -> float:
    """Larger is better; continues below zero so flat regions still have a slope.

    Finite-key points that certify no single photons rank below every
    point that does, ordered by how far they fall short. Scoring them by
    the error-correction leak alone would reward ever weaker signals.
    """
    short = r.extras.get("single_photon_shortfall") if isinstance(r, FiniteKeyResult) else None
    if short is not None and math.isfinite(short):
        return -r.extras["R_s"] * (1.0 + short)
    s = r.signed_rate_bps
    return s if math.isfinite(s) else -math.inf


# ----------------------------------------------------------------- search


def _optimize_signal(objective, params, memory, config, warm):
    lo, hi = config.z_bounds
    grid = np.geomspace(lo, hi, 41)

    def value(log_z: float) -> float:
        r = evaluate(objective, params, memory, _default_set(math.exp(log_z), config))
        return -_score(r)

    scores = [value(math.log(z)) for z in grid]
    k = int(np.argmin(scores))
    starts = [k]
    if warm is not None:
        starts.append(int(np.argmin(np.abs(np.log(grid) - math.log(warm.z)))))
    best_z, best_val = grid[k], scores[k]
    evals = len(grid)
    for s in sorted(set(starts)):
        a = math.log(grid[max(s - 1, 0)])
        b = math.log(grid[min(s + 1, len(grid) - 1)])
        res = minimize_scalar(value, bounds=(a, b), method="bounded", options={"xatol": 1e-6})
        evals += res.nfev
        if res.fun < best_val:
            best_z, best_val = math.exp(res.x), res.fun
    I = _default_set(best_z, config)
    return OptimizationResult(I, evaluate(objective, params, memory, I), evals)


def _default_set(z: float, config: OptimizationConfig) -> IntensitySet:
    v = config.v
    return IntensitySet(z=z, w1=v + (z - v) / 2, w2=v + (z - v) / 8, v=v)


def _initial_points(config: OptimizationConfig, warm: IntensitySet | None) -> list[np.ndarray]:
    rng = np.random.default_rng(config.seed)
    lo, hi = config.z_bounds
    points = []
    if warm is not None:
        points.append(encode(warm, config))
    if lo < 0.5 < hi and config.v < 0.01:
        reference = IntensitySet(z=0.5, w1=0.1, w2=0.01, v=config.v, p_z=0.7, p_w1=0.1, p_w2=0.1, p_v=0.1)
        points.append(encode(reference, config))
    size = config.warm_population if warm is not None else config.population
    for _ in range(size):
        points.append(np.array([
            rng.uniform(-3.0, 3.0),
            rng.uniform(-4.0, 3.0),
            rng.uniform(-4.0, 3.0),
            rng.uniform(-2.0, 2.0),
            rng.uniform(-2.0, 2.0),
            rng.uniform(-2.0, 2.0),
        ]))
    return points


def optimize_rate(
    objective: Objective | str,
    params: SystemParams,
    memory: MemoryParams | None = None,
    N: float | None = None,
    T_col: float | None = None,
    config: OptimizationConfig | None = None,
    warm_start: IntensitySet | None = None,
) -> OptimizationResult:
    """Best intensities found for ``objective`` at ``params.L``.

    Asymptotic objectives depend on the signal only, so a one-dimensional
    search is used there. For finite objectives the candidates are the warm
    start (if any), a fixed reference point and a seeded random population.
    The best point ever evaluated is returned, so the result is never worse
    than any starting point.
    """
    objective = Objective(objective)
    config = config or OptimizationConfig()
    if objective.memory_assisted:
        _need(memory)
    if not objective.finite:
        return _optimize_signal(objective, params, memory, config, warm_start)

    n_rounds = block_size(objective, params, memory, N, T_col)
    best: dict = {"score": -math.inf, "x": None, "result": None}
    count = [0]

    def f(x: np.ndarray) -> float:
        count[0] += 1
        I = decode(x, config)
        r = evaluate(objective, params, memory, I, n_rounds, config.epsilon)
        s = _score(r)
        if s > best["score"] or best["x"] is None:
            best.update(score=s, x=np.array(x), result=r)
        return -s if math.isfinite(s) else 1e300

    starts = _initial_points(config, warm_start)
    values = [f(x) for x in starts]
    order = np.argsort(values, kind="stable")
    n_refine = config.warm_restarts if warm_start is not None else config.restarts
    # Refine the most promising starts; the rest only count as evaluated points.
    for i in order[: max(n_refine, 1)]:
        x0 = starts[i]
        scale = max(abs(values[i]), 1e-300)
        minimize(
            f,
            x0,
            method="Nelder-Mead",
            options={
                "maxfev": config.max_evals,
                "xatol": 1e-3,
                "fatol": config.tolerance * scale,
                "initial_simplex": _simplex(x0),
            },
        )
    x = best["x"]
    if warm_start is not None:
        # The encode/decode round trip moves the warm point by rounding, so
        # the exact set is scored too.
        r = evaluate(objective, params, memory, warm_start, n_rounds, config.epsilon)
        if _score(r) >= best["score"]:
            return OptimizationResult(warm_start, r, count[0] + 1, encode(warm_start, config))
    return OptimizationResult(decode(x, config), best["result"], count[0], x)


def _simplex(x0: np.ndarray, step: float = 0.5) -> np.ndarray:
    pts = [x0]
    for i in range(len(x0)):
        p = np.array(x0, dtype=float)
        p[i] += step
        pts.append(p)
    return np.array(pts)
