"""Nominal detection and error counts per intensity pair.

Counts are the expected values ``M = N Q`` and ``E = e M``. Only pairs in
which both users picked the same basis are kept: ``(z, z)`` and the nine
decoy pairs.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .asymptotic import (
    decay_ratio,
    e11_mdi,
    mdi_dark_count_prob,
    mdi_gain_x,
    mdi_gain_z,
    mean_decoherence_error,
    qm_error_pair,
    rounds_to_load,
    y11_mdi,
)
from .loading import LoadingStats, loading_stats
from .params import (
    X_LABELS,
    Decoherence,
    IntensitySet,
    MemoryParams,
    SystemParams,
    channel_transmittance,
    dark_count_prob,
    repetition_rate,
)

__all__ = [
    "ObservedCounts",
    "ma_expected_counts",
    "mdi_expected_counts",
    "ma_pair_gains",
    "sample_counts",
    "write_counts_csv",
    "read_counts_csv",
    "SAME_BASIS_PAIRS",
]

Pair = tuple[str, str]
SAME_BASIS_PAIRS: tuple[Pair, ...] = (("z", "z"),) + tuple((a, b) for a in X_LABELS for b in X_LABELS)
BASIS_OF = {"z": "Z", "w1": "X", "w2": "X", "v": "X"}


@dataclass
class ObservedCounts:
    """Per-pair counts ``M[(a, b)]`` and errors ``E[(a, b)]`` from ``N`` rounds."""

    N: float
    counts: dict[Pair, float]
    errors: dict[Pair, float]
    basis_of: dict[str, str] = field(default_factory=lambda: dict(BASIS_OF))
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, m in self.counts.items():
            if self.basis_of[key[0]] != self.basis_of[key[1]]:
                raise ValueError(f"cross-basis pair {key} is not kept")
            e = self.errors.get(key, 0.0)
            tol = 1e-9 * max(1.0, m)
            if not (-tol <= e <= m + tol) or m > self.N * (1 + 1e-12) + tol:
                raise ValueError(f"pair {key}: need 0 <= E <= M <= N, got E={e}, M={m}")

    def M(self, a: str, b: str) -> float:
        return self.counts.get((a, b), 0.0)

    def E(self, a: str, b: str) -> float:
        return self.errors.get((a, b), 0.0)

    @property
    def M_Z(self) -> float:
        return self.M("z", "z")

    @property
    def e_Z(self) -> float:
        m = self.M_Z
        return self.E("z", "z") / m if m > 0 else math.nan


def _ma_loadings(params: SystemParams, memory: MemoryParams, intensities: IntensitySet) -> dict[str, LoadingStats]:
    return {
        label: loading_stats(BASIS_OF[label], mu, params, memory)
        for label, (mu, _) in intensities.labelled().items()
    }


def ma_pair_gains(
    params: SystemParams,
    memory: MemoryParams,
    intensities: IntensitySet,
    loadings: dict[str, LoadingStats] | None = None,
) -> tuple[dict[Pair, float], dict[Pair, float], dict]:
    """Per-round success probabilities and conditional error rates per pair.

    Cross-basis pairs are computed as part of the normalisation and then
    dropped.
    """
    st = loadings if loadings is not None else _ma_loadings(params, memory, intensities)
    probs = {label: p for label, (_, p) in intensities.labelled().items()}
    p_bar = sum(probs[k] * st[k].p_load for k in probs)
    gains: dict[Pair, float] = {}
    errs: dict[Pair, float] = {}
    meta: dict = {"p_bar": p_bar, "loadings": st}
    if p_bar <= 0.0:
        meta["Q_tot"] = 0.0
        return {k: 0.0 for k in SAME_BASIS_PAIRS}, {k: 0.0 for k in SAME_BASIS_PAIRS}, meta

    R_s = repetition_rate(params, memory)
    T = 1.0 / R_s
    p_dc = dark_count_prob(params, memory)
    eta_m = memory.eta_w_eta_r0 * params.eta_d
    N_L = rounds_to_load(p_bar)
    eta_mp = decay_ratio(p_bar, T, memory.T1) * eta_m
    q_tot = y11_mdi(eta_m, eta_mp, p_dc) / (N_L + memory.N_r)
    d = mean_decoherence_error(p_bar, T, memory)
    meta.update(Q_tot=q_tot, N_L=N_L, eta_m=eta_m, eta_m_prime=eta_mp, e_decoherence=d, R_s=R_s)

    all_q = 0.0
    for a in probs:
        for b in probs:
            q = q_tot * probs[a] * probs[b] * st[a].p_load * st[b].p_load / (p_bar * p_bar)
            all_q += q
            if BASIS_OF[a] != BASIS_OF[b]:
                continue
            gains[(a, b)] = q
            if q <= 0.0 or not (st[a].defined and st[b].defined):
                errs[(a, b)] = 0.0
                continue
            ea, eb = st[a].e_load, st[b].e_load
            if a == "z":
                if memory.decoherence is Decoherence.DEPHASING:
                    e_qm = 2.0 * ea * (1.0 - ea)
                else:
                    e_qm = qm_error_pair(ea, eb, d)
                errs[(a, b)] = e11_mdi("Z", eta_m, eta_mp, e_qm, p_dc)
            else:
                errs[(a, b)] = e11_mdi("X", eta_m, eta_mp, qm_error_pair(ea, eb, d), p_dc)
    meta["Q_all_pairs"] = all_q
    return gains, errs, meta


def ma_expected_counts(
    params: SystemParams, memory: MemoryParams, intensities: IntensitySet, N: float
) -> ObservedCounts:
    """Expected memory-assisted counts for a block of ``N`` rounds."""
    if not N > 0:
        raise ValueError("N must be positive")
    gains, errs, meta = ma_pair_gains(params, memory, intensities)
    M = {k: N * gains[k] for k in SAME_BASIS_PAIRS}
    E = {k: min(max(errs[k], 0.0), 1.0) * M[k] for k in SAME_BASIS_PAIRS}
    return ObservedCounts(N=N, counts=M, errors=E, meta=meta)


def mdi_expected_counts(params: SystemParams, intensities: IntensitySet, N: float) -> ObservedCounts:
    """Expected memoryless counts for a block of ``N`` rounds."""
    if not N > 0:
        raise ValueError("N must be positive")
    p_d = mdi_dark_count_prob(params)
    eta = channel_transmittance(params) * params.eta_d
    e_d = 2.0 * params.e_mis * (1.0 - params.e_mis)
    lab = intensities.labelled()
    M: dict[Pair, float] = {}
    E: dict[Pair, float] = {}
    for a, b in SAME_BASIS_PAIRS:
        (ia, pa), (ib, pb) = lab[a], lab[b]
        gain_fn = mdi_gain_z if a == "z" else mdi_gain_x
        q, err = gain_fn(ia, ib, eta, p_d, e_d)
        M[(a, b)] = N * pa * pb * max(q, 0.0)
        E[(a, b)] = N * pa * pb * min(max(err, 0.0), max(q, 0.0))
    return ObservedCounts(N=N, counts=M, errors=E, meta={"p_d": p_d, "eta": eta, "e_d": e_d})


def sample_counts(nominal: ObservedCounts, rng: np.random.Generator) -> ObservedCounts:
    """Poisson counts around the nominal values; errors thinned binomially."""
    M: dict[Pair, float] = {}
    E: dict[Pair, float] = {}
    for k, m in nominal.counts.items():
        draw = int(rng.poisson(m)) if m > 0 else 0
        e_rate = nominal.errors.get(k, 0.0) / m if m > 0 else 0.0
        M[k] = float(draw)
        E[k] = float(rng.binomial(draw, min(max(e_rate, 0.0), 1.0))) if draw > 0 else 0.0
    return ObservedCounts(N=nominal.N, counts=M, errors=E, basis_of=dict(nominal.basis_of))


def write_counts_csv(counts: ObservedCounts, target, intensities: IntensitySet | None = None) -> None:
    """Write ``a,b,M,E`` rows; ``N`` and intensities go in ``#`` comment lines."""
    close = False
    if isinstance(target, (str, Path)):
        fh = open(target, "w", newline="")
        close = True
    else:
        fh = target
    try:
        fh.write(f"# N = {counts.N!r}\n")
        if intensities is not None:
            for label, (mu, p) in intensities.labelled().items():
                fh.write(f"# {label} = {mu!r}\n# p_{label} = {p!r}\n")
        w = csv.writer(fh)
        w.writerow(["a", "b", "M", "E"])
        for (a, b) in SAME_BASIS_PAIRS:
            w.writerow([a, b, repr(counts.M(a, b)), repr(counts.E(a, b))])
    finally:
        if close:
            fh.close()


def read_counts_csv(source) -> tuple[ObservedCounts, dict[str, float]]:
    """Parse the format of :func:`write_counts_csv`.

    Returns the counts and any ``key = value`` pairs found in comments.
    """
    text = Path(source).read_text() if isinstance(source, (str, Path)) else source.read()
    header: dict[str, float] = {}
    body: list[str] = []
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("#"):
            kv = stripped[1:].split("=", 1)
            if len(kv) == 2:
                try:
                    header[kv[0].strip()] = float(kv[1])
                except ValueError:
                    pass
        elif stripped:
            body.append(line)
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    if not rows or not {"a", "b", "M", "E"} <= set(rows[0]):
        raise ValueError("counts CSV needs columns a, b, M, E")
    M = {(r["a"], r["b"]): float(r["M"]) for r in rows}
    E = {(r["a"], r["b"]): float(r["E"]) for r in rows}
    for key in M:
        if key[0] not in BASIS_OF or key[1] not in BASIS_OF:
            raise ValueError(f"unknown intensity label in pair {key}")
    if "N" not in header:
        raise ValueError("counts CSV is missing the '# N = ...' line")
    return ObservedCounts(N=header["N"], counts=M, errors=E), header

