"""Finite-key parameter estimation and key length.

The chain is: multiplicative Chernoff bounds on the expected decoy counts,
two linear programs over photon-number-resolved counts (a lower bound on
single-photon detections and an upper bound on their phase errors), random
sampling down to the signal basis, and finally the key length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog

from .asymptotic import entropy_capped
from .counts import ObservedCounts, ma_expected_counts, mdi_expected_counts
from .numerics import lambert_w_offset, lambert_w_offset_shift
from .params import (
    MDI_REPETITION_RATE,
    X_LABELS,
    IntensitySet,
    MemoryParams,
    SystemParams,
    repetition_rate,
)

__all__ = [
    "DEFAULT_EPSILON",
    "DEFAULT_N_CUT",
    "BOUNDS_PER_ESTIMATE",
    "ConcentrationBound",
    "DecoyLP",
    "LPOutcome",
    "FiniteKeyResult",
    "chernoff_deltas",
    "chernoff_expectation_bounds",
    "chernoff_outcome_bounds",
    "chernoff_outcome_delta",
    "decoy_lp_m11",
    "decoy_lp_e11",
    "signed_m11_bound",
    "p_zz_given_11",
    "restrict_to_z",
    "key_length",
    "estimate_key",
    "ma_finite",
    "mdi_finite",
]

DEFAULT_EPSILON = 0.5e-11
DEFAULT_N_CUT = 10
BOUNDS_PER_ESTIMATE = 20


# ---------------------------------------------------------------- Chernoff


def chernoff_deltas(chi: float, epsilon: float) -> tuple[float, float]:
    """``(delta_L, delta_U)`` for an observed sum ``chi > 0`` of Bernoulli trials.

    With ``s = 1/(1 + delta_L)`` (or ``1/(1 - delta_U)``) the defining
    equations reduce to ``s - 1 - ln s = ln(2/eps)/chi``, whose two roots
    are ``-W_0`` and ``-W_{-1}`` of ``-exp(-1 - ln(2/eps)/chi)``.
    """
    _check_eps(epsilon)
    if not chi > 0:
        raise ValueError("chi must be positive; use chernoff_expectation_bounds for chi = 0")
    kappa = math.log(2.0 / epsilon) / chi
    y_lo = lambert_w_offset_shift(0, kappa)   # s_L - 1, in (-1, 0]
    s_lo = -lambert_w_offset(0, kappa)         # s_L itself, accurate when tiny
    y_hi = lambert_w_offset_shift(-1, kappa)  # s_U - 1, >= 0
    delta_l = -y_lo / s_lo
    delta_u = y_hi / (1.0 + y_hi)
    return delta_l, delta_u


def chernoff_expectation_bounds(chi: float, epsilon: float) -> tuple[float, float]:
    """Bounds ``(E_L, E_U)`` on the expectation of an observed count ``chi``.

    For ``chi = 0`` this returns ``(0, ln(2/eps))``.
    """
    _check_eps(epsilon)
    if chi < 0:
        raise ValueError("chi must be non-negative")
    if chi == 0:
        return 0.0, math.log(2.0 / epsilon)
    kappa = math.log(2.0 / epsilon) / chi
    return chi * -lambert_w_offset(0, kappa), chi * (1.0 + lambert_w_offset_shift(-1, kappa))


def chernoff_outcome_delta(expectation: float, epsilon: float) -> float:
    """``delta`` of the symmetric outcome bound; infinite at zero expectation."""
    _check_eps(epsilon)
    if expectation <= 0:
        return math.inf
    return _outcome_spread(expectation, epsilon) / expectation


def _outcome_spread(expectation: float, epsilon: float) -> float:
    """``delta * expectation``, finite at zero."""
    le = math.log(epsilon)
    return 0.5 * (-le + math.sqrt(le * le - 8.0 * le * expectation))


def chernoff_outcome_bounds(expectation: float, epsilon: float, direction: str) -> float:
    """Bound the outcome of a Bernoulli sum with known ``expectation``.

    ``direction`` is ``"lower"`` (clamped at 0) or ``"upper"``.
    """
    _check_eps(epsilon)
    if expectation < 0:
        raise ValueError("expectation must be non-negative")
    spread = _outcome_spread(expectation, epsilon)
    if direction == "lower":
        return max(0.0, expectation - spread)
    if direction == "upper":
        return expectation + spread
    raise ValueError("direction must be 'lower' or 'upper'")


def _check_eps(epsilon: float) -> None:
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")


@dataclass(frozen=True)
class ConcentrationBound:
    """A single concentration bound with its failure probability."""

    epsilon: float
    kind: str  # "expectation_from_outcome" or "outcome_from_expectation"

    def __post_init__(self) -> None:
        _check_eps(self.epsilon)
        if self.kind not in ("expectation_from_outcome", "outcome_from_expectation"):
            raise ValueError(f"unknown bound kind {self.kind!r}")

    def __call__(self, value: float, direction: str | None = None):
        if self.kind == "expectation_from_outcome":
            return chernoff_expectation_bounds(value, self.epsilon)
        return chernoff_outcome_bounds(value, self.epsilon, direction or "lower")


# ------------------------------------------------------------------ Decoy LP


def _poisson(n: int, mu: float) -> float:
    if mu == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(mu) - mu - math.lgamma(n + 1))


def _p_one(intensities: IntensitySet) -> float:
    return sum(p * _poisson(1, mu) for mu, p in intensities.labelled().values())


@dataclass(frozen=True)
class LPOutcome:
    value: float
    success: bool
    message: str = ""


class DecoyLP:
    """Coefficient tables of the photon-number decomposition of decoy counts.

    Column order: every ``(n, m)`` with ``n, m <= n_cut`` except ``(1, 1)``,
    then the single-photon pair count, then one tail slack per pair.
    """

    def __init__(self, intensities: IntensitySet, n_cut: int = DEFAULT_N_CUT):
        if n_cut < 3:
            raise ValueError("n_cut must be at least 3")
        self.intensities = intensities
        self.n_cut = n_cut
        lab = intensities.labelled()
        self.pairs = [(a, b) for a in X_LABELS for b in X_LABELS]
        self.photon_pairs = [(n, m) for n in range(n_cut + 1) for m in range(n_cut + 1) if (n, m) != (1, 1)]

        pn = {a: np.array([_poisson(n, lab[a][0]) for n in range(n_cut + 1)]) for a in X_LABELS}
        self.p_n_given = pn
        p_nx = sum(lab[a][1] * pn[a] for a in X_LABELS)
        self.p_nX = p_nx
        with np.errstate(divide="ignore", invalid="ignore"):
            p_a_given_n = {a: np.where(p_nx > 0, lab[a][1] * pn[a] / p_nx, 0.0) for a in X_LABELS}
        self.p_a_given_nX = p_a_given_n
        p1 = _p_one(intensities)
        self.p1 = p1
        self.p_a_given_1 = {a: (lab[a][1] * _poisson(1, lab[a][0]) / p1 if p1 > 0 else 0.0) for a in X_LABELS}

        rows = []
        for a, b in self.pairs:
            rows.append([p_a_given_n[a][n] * p_a_given_n[b][m] for n, m in self.photon_pairs])
        self.coef_nm = np.array(rows)
        self.coef_11 = np.array([self.p_a_given_1[a] * self.p_a_given_1[b] for a, b in self.pairs])
        inside = {a: float(np.sum(pn[a])) for a in X_LABELS}
        self.tail_mass = np.array(
            [max(0.0, 1.0 - inside[a] * inside[b]) for a, b in self.pairs]
        )
        self.pair_prob = np.array([lab[a][1] * lab[b][1] for a, b in self.pairs])
        # Largest possible count of each photon pair (unit yield), per round.
        self.cap_nm = np.array([p_nx[n] * p_nx[m] for n, m in self.photon_pairs])
        self.cap_11 = p1 * p1

    def coefficient(self, a: str, b: str, n: int, m: int) -> float:
        """``p_{ab|nm,X}`` for any photon numbers (also beyond the cut)."""
        lab = self.intensities.labelled()
        def cond(lbl: str, k: int) -> float:
            tot = sum(lab[x][1] * _poisson(k, lab[x][0]) for x in X_LABELS)
            return lab[lbl][1] * _poisson(k, lab[lbl][0]) / tot if tot > 0 else 0.0
        return cond(a, n) * cond(b, m)

    def solve(self, observed: np.ndarray, N: float, epsilon: float, objective: str,
              signed: bool = False) -> LPOutcome:
        """Optimise the single-photon variable subject to Chernoff-bounded rows.

        ``observed`` is the vector of counts for ``self.pairs``. With
        ``signed`` the single-photon variable may go negative and every
        photon-pair count is capped at unit yield; the minimum then measures
        how far the data are from certifying any single photons.
        """
        bounds_lu = np.array([chernoff_expectation_bounds(float(x), epsilon) for x in observed])
        lo, hi = bounds_lu[:, 0], bounds_lu[:, 1]
        n_nm = len(self.photon_pairs)
        n_pairs = len(self.pairs)

        # Rows in units of their upper bound; each column then normalised to
        # a unit maximum so every variable is a fraction of its tightest row.
        tail_ub = N * self.pair_prob * self.tail_mass
        A = np.zeros((n_pairs, n_nm + 1 + n_pairs))
        A[:, :n_nm] = self.coef_nm
        A[:, n_nm] = self.coef_11
        A[:, n_nm + 1:] = np.eye(n_pairs)
        A /= hi[:, None]
        col = np.max(A, axis=0)
        col = np.where(col > 0, col, 1.0)
        A /= col[None, :]
        A_ub = np.vstack([A, -A])
        b_ub = np.concatenate([np.ones(n_pairs), -lo / hi])
        col_11 = 1.0 / col[n_nm]

        if signed:
            cap = N * self.cap_11 * col[n_nm]
            var_bounds = [(0.0, N * c * col[j]) for j, c in enumerate(self.cap_nm)] + [(-cap, cap)]
        else:
            var_bounds = [(0.0, None)] * (n_nm + 1)
        var_bounds += [(0.0, tail_ub[i] * col[n_nm + 1 + i]) for i in range(n_pairs)]
        c = np.zeros(n_nm + 1 + n_pairs)
        c[n_nm] = 1.0 if objective == "min" else -1.0
        # Dual simplex first; the interior-point solver is the fallback when
        # the simplex stalls on an ill-conditioned instance.
        for method in ("highs-ds", "highs-ipm"):
            res = linprog(
                c,
                A_ub=A_ub,
                b_ub=b_ub,
                bounds=var_bounds,
                method=method,
                options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
            )
            if res.status in (0, 2, 3):
                break
        if res.status != 0:
            return LPOutcome(math.nan, False, res.message)
        return LPOutcome(float(res.x[n_nm] * col_11), True, "")


@lru_cache(maxsize=256)
def _cached_lp(intensities: IntensitySet, n_cut: int) -> DecoyLP:
    return DecoyLP(intensities, n_cut)


def _x_vector(counts: ObservedCounts, which: str) -> np.ndarray:
    src = counts.counts if which == "M" else counts.errors
    return np.array([max(src.get((a, b), 0.0), 0.0) for a in X_LABELS for b in X_LABELS])


def decoy_lp_m11(
    counts: ObservedCounts,
    intensities: IntensitySet,
    epsilon: float = DEFAULT_EPSILON,
    n_cut: int = DEFAULT_N_CUT,
) -> float:
    """Lower bound on single-photon-pair detections in both bases.

    Returns 0 when every decoy count is zero or the program is infeasible.
    """
    return _m11_outcome(counts, intensities, epsilon, n_cut).value


def _m11_outcome(counts, intensities, epsilon, n_cut) -> LPOutcome:
    obs = _x_vector(counts, "M")
    if not np.any(obs > 0):
        return LPOutcome(0.0, True, "no decoy detections")
    out = _cached_lp(intensities, n_cut).solve(obs, counts.N, epsilon, "min")
    if not out.success:
        return LPOutcome(0.0, False, f"infeasible single-photon LP: {out.message}")
    return LPOutcome(max(out.value, 0.0), True)


def signed_m11_bound(
    counts: ObservedCounts,
    intensities: IntensitySet,
    epsilon: float = DEFAULT_EPSILON,
    n_cut: int = DEFAULT_N_CUT,
) -> float:
    """Lower bound on single-photon detections allowed to go negative.

    Equals :func:`decoy_lp_m11` whenever that is positive (up to the unit
    yield caps). Below zero it says how short the data fall, which gives
    the optimiser a slope where the ordinary bound is flat at zero.
    """
    obs = _x_vector(counts, "M")
    if not np.any(obs > 0):
        return -counts.N * _p_one(intensities) ** 2
    out = _cached_lp(intensities, n_cut).solve(obs, counts.N, epsilon, "min", signed=True)
    return out.value if out.success else math.nan


def decoy_lp_e11(
    counts: ObservedCounts,
    intensities: IntensitySet,
    epsilon: float = DEFAULT_EPSILON,
    n_cut: int = DEFAULT_N_CUT,
) -> float:
    """Upper bound on phase errors among single-photon-pair detections.

    NaN when the program is infeasible.
    """
    return _e11_outcome(counts, intensities, epsilon, n_cut).value


def _e11_outcome(counts, intensities, epsilon, n_cut) -> LPOutcome:
    obs = _x_vector(counts, "E")
    out = _cached_lp(intensities, n_cut).solve(obs, counts.N, epsilon, "max")
    if not out.success:
        return LPOutcome(math.nan, False, f"infeasible phase-error LP: {out.message}")
    return out


def p_zz_given_11(intensities: IntensitySet) -> float:
    """Probability that a single-photon pair is attributed to the signal basis."""
    p1 = _p_one(intensities)
    if p1 <= 0:
        return 0.0
    return (intensities.p_z * _poisson(1, intensities.z) / p1) ** 2


def restrict_to_z(count_bound: float, intensities: IntensitySet, epsilon: float, direction: str) -> float:
    """Sampling bound on the signal-basis share of a single-photon count bound."""
    if count_bound < 0:
        raise ValueError("count_bound must be non-negative")
    return chernoff_outcome_bounds(p_zz_given_11(intensities) * count_bound, epsilon, direction)


# ------------------------------------------------------------- key length


@dataclass
class FiniteKeyResult:
    M11_L: float = 0.0
    M11Z_L: float = 0.0
    E11_U: float = math.nan
    E11Z_U: float = math.nan
    e_ph_U: float = math.nan
    e_Z: float = math.nan
    M_Z: float = 0.0
    K: float = 0.0
    signed_K: float = 0.0
    rate_bps: float = 0.0
    signed_rate_bps: float = 0.0
    total_epsilon: float = 0.0
    N: float = 0.0
    reason: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def e_ph_defined(self) -> bool:
        return self.M11Z_L > 0 and not math.isnan(self.e_ph_U)


def key_length(
    counts: ObservedCounts,
    M11Z_L: float,
    E11Z_U: float,
    *,
    f_ec: float = 1.0,
    R_s: float = 1.0,
    epsilon: float = DEFAULT_EPSILON,
) -> FiniteKeyResult:
    """Key length from the signal-basis bounds and the sifted-key statistics."""
    out = FiniteKeyResult(M11Z_L=M11Z_L, E11Z_U=E11Z_U, N=counts.N)
    out.total_epsilon = BOUNDS_PER_ESTIMATE * epsilon
    out.M_Z = counts.M_Z
    out.e_Z = counts.e_Z
    if out.M_Z <= 0 or math.isnan(out.e_Z):
        out.reason = "no sifted signal counts"
        return out
    if M11Z_L <= 0 or math.isnan(E11Z_U):
        # Nothing to distil; the signed value keeps the error-correction cost.
        out.signed_K = -f_ec * out.M_Z * entropy_capped(out.e_Z)
        out.signed_rate_bps = out.signed_K * R_s / counts.N
        out.reason = "no single-photon lower bound"
        return out
    # An error rate cannot exceed one, however few single photons are certified.
    out.e_ph_U = min(E11Z_U / M11Z_L, 1.0)
    out.signed_K = M11Z_L * (1.0 - entropy_capped(out.e_ph_U)) - f_ec * out.M_Z * entropy_capped(out.e_Z)
    out.K = max(0.0, out.signed_K)
    out.signed_rate_bps = out.signed_K * R_s / counts.N
    out.rate_bps = out.K * R_s / counts.N
    if out.K == 0.0:
        out.reason = "privacy amplification and error correction exceed the raw key"
    return out


def estimate_key(
    counts: ObservedCounts,
    intensities: IntensitySet,
    *,
    epsilon: float = DEFAULT_EPSILON,
    n_cut: int = DEFAULT_N_CUT,
    f_ec: float = 1.0,
    R_s: float = 1.0,
) -> FiniteKeyResult:
    """Run the full estimation chain on observed counts."""
    m = _m11_outcome(counts, intensities, epsilon, n_cut)
    e = _e11_outcome(counts, intensities, epsilon, n_cut)
    m11z = restrict_to_z(m.value, intensities, epsilon, "lower")
    if e.success:
        e11z = restrict_to_z(e.value, intensities, epsilon, "upper")
    else:
        e11z = math.nan
    out = key_length(counts, m11z, e11z, f_ec=f_ec, R_s=R_s, epsilon=epsilon)
    out.M11_L = m.value
    out.extras["R_s"] = R_s
    if m11z <= 0 and m.success:
        # How far from certifying any signal-basis single photons, as a
        # fraction of the most there could be.
        p_zz = p_zz_given_11(intensities)
        q = p_zz * signed_m11_bound(counts, intensities, epsilon, n_cut)
        scale = counts.N * p_zz * _p_one(intensities) ** 2
        if scale > 0:
            out.extras["single_photon_shortfall"] = (_outcome_spread(max(q, 0.0), epsilon) - q) / scale
    out.E11_U = e.value
    msgs = [x for x in (m.message if not m.success else "", e.message if not e.success else "") if x]
    if msgs:
        out.reason = "; ".join(msgs)
    out.extras["numerical_failure"] = bool(msgs)
    return out


def ma_finite(
    params: SystemParams,
    memory: MemoryParams,
    intensities: IntensitySet,
    N: float,
    *,
    epsilon: float = DEFAULT_EPSILON,
    n_cut: int = DEFAULT_N_CUT,
    f_ec: float | None = None,
) -> FiniteKeyResult:
    """Finite-key memory-assisted rate from nominal counts (``f_ec`` defaults to 1)."""
    counts = ma_expected_counts(params, memory, intensities, N)
    out = estimate_key(
        counts, intensities, epsilon=epsilon, n_cut=n_cut,
        f_ec=1.0 if f_ec is None else f_ec, R_s=repetition_rate(params, memory),
    )
    out.extras["Q_Z"] = counts.M_Z / N
    return out


def mdi_finite(
    params: SystemParams,
    intensities: IntensitySet,
    N: float,
    *,
    epsilon: float = DEFAULT_EPSILON,
    n_cut: int = DEFAULT_N_CUT,
    f_ec: float | None = None,
) -> FiniteKeyResult:
    """Finite-key memoryless rate from nominal counts on the 1 GHz clock."""
    counts = mdi_expected_counts(params, intensities, N)
    out = estimate_key(
        counts, intensities, epsilon=epsilon, n_cut=n_cut,
        f_ec=1.0 if f_ec is None else f_ec, R_s=MDI_REPETITION_RATE,
    )
    out.extras["Q_Z"] = counts.M_Z / N
    return out
