"""Distance sweeps, CSV curves and crossover detection."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .asymptotic import AsymptoticBreakdown
from .finite_key import DEFAULT_EPSILON, FiniteKeyResult
from .optimizer import Objective, OptimizationConfig, OptimizationResult, block_size, optimize_rate
from .params import (
    BUILTIN_MEMORIES,
    Decoherence,
    IntensitySet,
    MemoryParams,
    SystemParams,
    as_dict,
    builtin_memory,
)

__all__ = [
    "RunSpec",
    "SweepRow",
    "COLUMNS",
    "run_sweep",
    "write_sweep_csv",
    "read_sweep_csv",
    "find_crossover",
    "advantage_window",
    "cutoff_distance",
    "last_positive_distance",
    "distance_grid",
]

_INTENSITY_FIELDS = ("z", "w1", "w2", "v", "p_z", "p_w1", "p_w2", "p_v")
_DIAGNOSTICS = ("Q_Z", "e_Z", "e_ph", "M11Z_L")

COLUMNS: tuple[str, ...] = (
    ("L_km", "rate_ma_bps", "rate_mdi_bps")
    + tuple(f"ma_{k}" for k in _INTENSITY_FIELDS)
    + tuple(f"mdi_{k}" for k in _INTENSITY_FIELDS)
    + tuple(f"ma_{k}" for k in _DIAGNOSTICS)
    + tuple(f"mdi_{k}" for k in _DIAGNOSTICS)
    + ("reason",)
)


@dataclass(frozen=True)
class RunSpec:
    """A fully resolved sweep.

    Exactly one of ``N`` and ``T_col`` is used in finite mode. Keys in
    ``memory_overrides`` replace fields of the chosen memory, and
    ``system_overrides`` those of :class:`SystemParams`.
    """

    system: str = "both"
    memory: str = "wv"
    decoherence: str = "dephasing"
    mode: str = "asymptotic"
    N: float | None = None
    T_col: float | None = None
    L_start: float = 0.0
    L_stop: float = 500.0
    L_step: float = 10.0
    eta_c: float = 1.0
    epsilon: float = DEFAULT_EPSILON
    output: str | None = None
    seed: int = 0
    refine: bool = True
    workers: int = 1
    system_overrides: dict = field(default_factory=dict)
    memory_overrides: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.system not in ("ma", "mdi", "both"):
            raise ValueError("system must be ma, mdi or both")
        if self.memory.lower() not in {k.lower() for k in BUILTIN_MEMORIES} | {"custom"}:
            raise ValueError(f"unknown memory {self.memory!r}")
        Decoherence(self.decoherence)
        if self.mode not in ("asymptotic", "finite"):
            raise ValueError("mode must be asymptotic or finite")
        if self.mode == "finite" and (self.N is None) == (self.T_col is None):
            raise ValueError("finite mode needs exactly one of a block size and a collection time")
        if self.N is not None and not self.N > 0:
            raise ValueError("block size must be positive")
        if self.T_col is not None and not self.T_col > 0:
            raise ValueError("collection time must be positive")
        if not self.L_step > 0:
            raise ValueError("distance step must be positive")
        if self.L_start < 0:
            raise ValueError("distances must be non-negative")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        self.system_params(0.0)
        if self.system != "mdi":
            self.memory_params()
        OptimizationConfig(**self.optimizer)

    # -- resolved objects ---------------------------------------------------

    def system_params(self, L: float) -> SystemParams:
        base = SystemParams(L=L, eta_c=self.eta_c, f_ec=1.16 if self.mode == "asymptotic" else 1.0)
        return replace(base, **self.system_overrides)

    def memory_params(self) -> MemoryParams:
        if self.memory.lower() == "custom":
            required = {"eta_w_eta_r0", "T1", "tau_int"}
            missing = required - set(self.memory_overrides)
            if missing:
                raise ValueError(f"custom memory needs {sorted(missing)}")
            kw = dict(self.memory_overrides)
            kw.setdefault("T2", kw["T1"])
            kw.setdefault("decoherence", self.decoherence)
            return MemoryParams(name="custom", **kw)
        mem = builtin_memory(self.memory, self.decoherence)
        return replace(mem, **self.memory_overrides) if self.memory_overrides else mem

    def optimization_config(self) -> OptimizationConfig:
        kw = {"epsilon": self.epsilon, "seed": self.seed}
        kw.update(self.optimizer)
        return OptimizationConfig(**kw)

    def distances(self) -> list[float]:
        return distance_grid(self.L_start, self.L_stop, self.L_step)

    def header(self) -> dict[str, Any]:
        """Resolved configuration echoed into the CSV."""
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out.pop("output")
        out["system_params"] = as_dict(self.system_params(self.L_start))
        if self.system != "mdi":
            out["memory_params"] = as_dict(self.memory_params())
        out["optimizer_config"] = {k: v for k, v in as_dict(self.optimization_config()).items()}
        return out


def distance_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive grid; empty when ``stop < start``."""
    if stop < start:
        return []
    n = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + i * step, 9) for i in range(n + 1)]


@dataclass
class SweepRow:
    L_km: float
    rate_ma_bps: float = math.nan
    rate_mdi_bps: float = math.nan
    ma: OptimizationResult | None = None
    mdi: OptimizationResult | None = None
    reasons: list[str] = field(default_factory=list)
    failed: bool = False

    def as_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {"L_km": self.L_km, "rate_ma_bps": self.rate_ma_bps, "rate_mdi_bps": self.rate_mdi_bps}
        for tag, res in (("ma", self.ma), ("mdi", self.mdi)):
            I = res.intensities if res is not None else None
            for k in _INTENSITY_FIELDS:
                rec[f"{tag}_{k}"] = getattr(I, k) if I is not None else math.nan
            diag = _diagnostics(res.result) if res is not None else {}
            for k in _DIAGNOSTICS:
                rec[f"{tag}_{k}"] = diag.get(k, math.nan)
        rec["reason"] = "; ".join(r for r in self.reasons if r)
        return rec


def _diagnostics(r) -> dict[str, float]:
    if isinstance(r, AsymptoticBreakdown):
        return {"Q_Z": r.Q_Z, "e_Z": r.e_Z, "e_ph": r.e_ph, "M11Z_L": math.nan}
    if isinstance(r, FiniteKeyResult):
        return {"Q_Z": r.extras.get("Q_Z", math.nan), "e_Z": r.e_Z, "e_ph": r.e_ph_U, "M11Z_L": r.M11Z_L}
    return {}


# ------------------------------------------------------------------ sweeping


def _objectives(spec: RunSpec) -> list[tuple[str, Objective]]:
    finite = spec.mode == "finite"
    out = []
    if spec.system in ("ma", "both"):
        out.append(("ma", Objective.MA_FINITE if finite else Objective.MA_ASYMPTOTIC))
    if spec.system in ("mdi", "both"):
        out.append(("mdi", Objective.MDI_FINITE if finite else Objective.MDI_ASYMPTOTIC))
    return out


def _evaluate_point(spec: RunSpec, L: float, warm: dict[str, IntensitySet | None]) -> SweepRow:
    row = SweepRow(L_km=L)
    params = spec.system_params(L)
    memory = spec.memory_params() if spec.system != "mdi" else None
    config = spec.optimization_config()
    for tag, obj in _objectives(spec):
        try:
            kw = {}
            if obj.finite:
                kw["N"] = block_size(obj, params, memory, spec.N, spec.T_col)
            res = optimize_rate(obj, params, memory, config=config, warm_start=warm.get(tag), **kw)
        except (ValueError, ArithmeticError, FloatingPointError) as exc:
            row.failed = True
            row.reasons.append(f"{tag}: {exc}")
            setattr(row, f"rate_{tag}_bps", 0.0)
            continue
        setattr(row, tag, res)
        setattr(row, f"rate_{tag}_bps", res.rate_bps)
        if isinstance(res.result, FiniteKeyResult) and res.result.extras.get("numerical_failure"):
            row.failed = True
        if res.rate_bps <= 0 and res.result.reason:
            row.reasons.append(f"{tag}: {res.result.reason}")
        if res.rate_bps > 0:
            warm[tag] = res.intensities
    return row


def _run_chain(spec: RunSpec, distances: Sequence[float],
               warm: dict[str, IntensitySet | None] | None = None) -> list[SweepRow]:
    warm = dict(warm or {})
    return [_evaluate_point(spec, L, warm) for L in distances]


def _split(seq: Sequence[float], parts: int) -> list[list[float]]:
    chunks = np.array_split(np.arange(len(seq)), parts)
    return [[seq[i] for i in c] for c in chunks if len(c)]


def _run_chains(spec: RunSpec, chains: list[tuple[list[float], dict]]) -> list[SweepRow]:
    if spec.workers == 1 or len(chains) < 2:
        return [row for d, w in chains for row in _run_chain(spec, d, w)]
    with ProcessPoolExecutor(max_workers=min(spec.workers, len(chains))) as pool:
        parts = list(pool.map(_run_chain, [spec] * len(chains), [d for d, _ in chains], [w for _, w in chains]))
    return [row for part in parts for row in part]


def run_sweep(spec: RunSpec) -> list[SweepRow]:
    """Optimised rates along the distance grid, refined near crossovers.

    Each refinement segment starts from the optimum of the grid point on
    its left. Writes the CSV when ``spec.output`` is set.
    """
    distances = spec.distances()
    parts = max(1, min(spec.workers, len(distances)))
    rows = _run_chains(spec, [(c, {}) for c in _split(distances, parts)] if distances else [])
    if spec.refine and spec.system == "both" and spec.L_step > 1.0 and rows:
        chains = _refinement_chains(rows)
        if chains:
            rows = sorted(rows + _run_chains(spec, chains), key=lambda r: r.L_km)
    if spec.output:
        write_sweep_csv(rows, spec.output, spec)
    return rows


def _advantage(ma: float, mdi: float) -> bool:
    return ma > 0 and ma > mdi


def _refinement_chains(rows: list[SweepRow]) -> list[tuple[list[float], dict]]:
    """1 km points inside every grid interval where the advantage flips."""
    known = {r.L_km for r in rows}
    chains = []
    for a, b in zip(rows, rows[1:]):
        if _advantage(a.rate_ma_bps, a.rate_mdi_bps) == _advantage(b.rate_ma_bps, b.rate_mdi_bps):
            continue
        pts = []
        L = a.L_km + 1.0
        while L < b.L_km - 1e-9:
            if round(L, 9) not in known:
                pts.append(round(L, 9))
            L += 1.0
        warm = {tag: res.intensities for tag, res in (("ma", a.ma), ("mdi", a.mdi))
                if res is not None and res.rate_bps > 0}
        if pts:
            chains.append((pts, warm))
    return chains


# ---------------------------------------------------------------------- CSV


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(float(v))
    return str(v)


def write_sweep_csv(rows: Iterable[SweepRow], target, spec: RunSpec | None = None) -> None:
    """CSV with a ``#`` comment block echoing the resolved configuration."""
    buf = io.StringIO()
    if spec is not None:
        for k, v in spec.header().items():
            buf.write(f"# {k} = {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        rec = row.as_record()
        w.writerow([_fmt(rec[c]) for c in COLUMNS])
    text = buf.getvalue()
    if isinstance(target, (str, os.PathLike)):
        Path(target).write_text(text)
    else:
        target.write(text)


def read_sweep_csv(source) -> list[dict[str, Any]]:
    """Rows of a sweep CSV as dicts; numeric columns become floats."""
    if isinstance(source, (str, os.PathLike)):
        text = Path(source).read_text()
    else:
        text = source.read()
    body = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not body:
        raise ValueError("sweep CSV has no header row")
    reader = csv.DictReader(io.StringIO("\n".join(body)))
    need = {"L_km", "rate_ma_bps", "rate_mdi_bps"}
    if not need <= set(reader.fieldnames or ()):
        raise ValueError(f"sweep CSV must have columns {sorted(need)}")
    out = []
    for rec in reader:
        row: dict[str, Any] = {}
        for k, v in rec.items():
            if k == "reason":
                row[k] = v or ""
                continue
            try:
                row[k] = float(v)
            except (TypeError, ValueError) as exc:
                raise ValueError(f"malformed value {v!r} in column {k}") from exc
        out.append(row)
    Ls = [r["L_km"] for r in out]
    if any(b <= a for a, b in zip(Ls, Ls[1:])):
        raise ValueError("distances must be strictly increasing")
    return out


# ---------------------------------------------------------------- crossover


def _as_records(source) -> list[dict[str, Any]]:
    if isinstance(source, list):
        if source and isinstance(source[0], SweepRow):
            return [r.as_record() for r in source]
        return source
    return read_sweep_csv(source)


def _crossing(L0: float, d0: float, L1: float, d1: float) -> float:
    """Linear zero of the rate difference between two grid points."""
    if d1 == d0:
        return L1
    t = -d0 / (d1 - d0)
    return L0 + min(max(t, 0.0), 1.0) * (L1 - L0)


def advantage_window(source) -> tuple[float | None, float | None]:
    """``(onset, end)`` of the first memory-assisted advantage region.

    Advantage means a positive memory-assisted rate above the memoryless
    one. ``end`` is None when the advantage lasts to the end of the sweep.
    """
    recs = _as_records(source)
    onset = end = None
    prev = None
    for r in recs:
        ma, mdi = r["rate_ma_bps"], r["rate_mdi_bps"]
        adv = _advantage(ma, mdi)
        if onset is None:
            if adv:
                if prev is None:
                    onset = r["L_km"]
                else:
                    onset = _crossing(prev["L_km"], prev["rate_ma_bps"] - prev["rate_mdi_bps"], r["L_km"], ma - mdi)
        elif not adv:
            d_prev = prev["rate_ma_bps"] - prev["rate_mdi_bps"]
            if ma <= 0 and mdi <= 0:
                # Both rates are gone: the advantage ends where the memory-assisted rate dies.
                end = _crossing(prev["L_km"], prev["rate_ma_bps"], r["L_km"], ma)
            else:
                end = _crossing(prev["L_km"], d_prev, r["L_km"], ma - mdi)
            break
        prev = r
    return onset, end


def find_crossover(source) -> float | None:
    """Smallest distance where the memory-assisted rate wins, or None."""
    return advantage_window(source)[0]


def cutoff_distance(source, column: str) -> float | None:
    """First distance after which ``column`` is zero (interpolated), or None."""
    recs = _as_records(source)
    seen_positive = False
    prev = None
    for r in recs:
        v = r[column]
        if v > 0:
            seen_positive = True
        elif seen_positive and prev is not None:
            return _crossing(prev["L_km"], prev[column], r["L_km"], v)
        prev = r
    return None


def last_positive_distance(source, column: str) -> float | None:
    recs = _as_records(source)
    pos = [r["L_km"] for r in recs if r[column] > 0]
    return max(pos) if pos else None
