"""Asymptotic key rates for the memory-assisted link and the memoryless reference.

Both share the single-photon yield and error of an asymmetric
measurement-device-independent Bell-state measurement, implemented in
:func:`y11_mdi` and :func:`e11_mdi`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .loading import LoadingStats, loading_stats, single_photon_loading
from .numerics import bessel_i0, binary_entropy
from .params import (
    MDI_REPETITION_RATE,
    Decoherence,
    MemoryParams,
    SystemParams,
    channel_transmittance,
    dark_count_prob,
    repetition_rate,
)

__all__ = [
    "E0",
    "AsymptoticBreakdown",
    "y11_mdi",
    "e11_mdi",
    "rounds_to_load",
    "decay_ratio",
    "mean_dephasing_error",
    "mean_depolarising_error",
    "mean_decoherence_error",
    "qm_error_single",
    "qm_error_pair",
    "mdi_gain_z",
    "mdi_gain_x",
    "mdi_dark_count_prob",
    "ma_asymptotic",
    "mdi_asymptotic",
    "signed_rate",
    "entropy_capped",
]

E0 = 0.5


def y11_mdi(eta_l: float, eta_r: float, p_d: float) -> float:
    """Single-photon-pair yield of an asymmetric polarisation BSM."""
    q = 1.0 - p_d
    return q * q * (
        0.5 * eta_l * eta_r
        + (2.0 * eta_l + 2.0 * eta_r - 3.0 * eta_l * eta_r) * p_d
        + 4.0 * (1.0 - eta_l) * (1.0 - eta_r) * p_d * p_d
    )


def e11_mdi(basis: str, eta_l: float, eta_r: float, e_d: float, p_d: float) -> float:
    """Single-photon-pair error rate; NaN when the yield vanishes."""
    if basis == "X":
        kappa = 1.0
    elif basis == "Z":
        kappa = 1.0 - 2.0 * p_d
    else:
        raise ValueError(f"basis must be 'X' or 'Z', got {basis!r}")
    y = y11_mdi(eta_l, eta_r, p_d)
    if y <= 0.0:
        return math.nan
    q = 1.0 - p_d
    return E0 - (E0 - e_d) * q * q * kappa * eta_l * eta_r / (2.0 * y)


def rounds_to_load(p: float) -> float:
    """Mean number of rounds until both of two memories, each loading w.p. ``p``, are full."""
    if not 0.0 < p <= 1.0:
        raise ValueError("loading probability must lie in (0, 1]")
    return (3.0 - 2.0 * p) / (p * (2.0 - p))


def decay_ratio(p: float, round_time: float, T1: float) -> float:
    """Average ``eta_m'/eta_m`` of the memory that loaded first."""
    E = math.exp(round_time / T1)
    return (1.0 + E - p) * p / ((2.0 - p) * (E + p - 1.0))


def mean_dephasing_error(p: float, round_time: float, T2: float) -> float:
    """Averaged X-basis flip probability of the waiting memory under dephasing."""
    # Same value as 1 - p/(1 - q^2) - p^2 (1 - p s) / ((1 - q s)(1 - q^2)),
    # rearranged so nothing cancels when p and T/T2 are small.
    s = math.exp(-round_time / T2)
    one_minus_s = -math.expm1(-round_time / T2)
    return (1.0 - 2.0 * p) * one_minus_s / ((2.0 - p) * (one_minus_s + p * s))


def mean_depolarising_error(p: float, round_time: float, T2: float) -> float:
    return 2.0 / 3.0 * mean_dephasing_error(p, round_time, T2)


def mean_decoherence_error(p: float, round_time: float, memory: MemoryParams) -> float:
    d = mean_dephasing_error(p, round_time, memory.T2)
    if memory.decoherence is Decoherence.DEPOLARISING:
        return 2.0 / 3.0 * d
    return d


def qm_error_single(e_load: float, d: float) -> float:
    """Combined flip probability when both memories share ``e_load`` and the
    waiting one also sees the decoherence error ``d``."""
    beta = 1.0 - 2.0 * e_load
    return 2.0 * e_load + 2.0 * beta * d - 2.0 * e_load * e_load - 4.0 * beta * d * e_load


def qm_error_pair(e_a: float, e_b: float, d: float) -> float:
    """Combined flip probability for memories loaded with flip rates ``e_a``, ``e_b``."""
    ba = 1.0 - 2.0 * e_a
    bb = 1.0 - 2.0 * e_b
    return (
        e_a + e_b + ba * d + bb * d
        - 2.0 * e_a * e_b - 2.0 * ba * d * e_b - 2.0 * bb * d * e_a
    )


def entropy_capped(e: float) -> float:
    """Binary entropy with the argument clipped to [0, 1/2]."""
    return binary_entropy(min(max(e, 0.0), 0.5))


def signed_rate(R_s: float, q11: float, e_ph: float, q_z: float, e_z: float, f: float) -> float:
    return R_s * (q11 * (1.0 - entropy_capped(e_ph)) - f * q_z * entropy_capped(e_z))


@dataclass
class AsymptoticBreakdown:
    """Every intermediate of an asymptotic rate evaluation."""

    Q_Z: float = 0.0
    e_Z: float = math.nan
    Q11_Z: float = 0.0
    e_ph: float = math.nan
    P_side: float = math.nan
    P_mid: float = math.nan
    N_L: float = math.nan
    eta_m: float = math.nan
    eta_m_prime: float = math.nan
    rate_bps: float = 0.0
    signed_rate_bps: float = 0.0
    extras: dict = field(default_factory=dict)
    reason: str = ""

    def as_row(self) -> dict:
        d = asdict(self)
        d.pop("extras")
        return d


NO_KEY = "privacy amplification and error correction exceed the raw key"


def ma_asymptotic(
    params: SystemParams, memory: MemoryParams, z: float, *, loading: LoadingStats | None = None
) -> AsymptoticBreakdown:
    """Asymptotic memory-assisted rate at signal intensity ``z``.

    ``loading`` may be passed to reuse a precomputed Z-basis result.
    """
    if z <= 0:
        raise ValueError("z must be positive")
    R_s = repetition_rate(params, memory)
    T = 1.0 / R_s
    p_dc = dark_count_prob(params, memory)
    st = loading if loading is not None else loading_stats("Z", z, params, memory)
    out = AsymptoticBreakdown()
    out.eta_m = memory.eta_w_eta_r0 * params.eta_d
    if st.p_load <= 0.0 or not st.defined:
        out.reason = "signal never loads the memory"
        return out
    p = st.p_load
    out.N_L = rounds_to_load(p)
    out.P_side = 1.0 / (out.N_L + memory.N_r)
    out.eta_m_prime = decay_ratio(p, T, memory.T1) * out.eta_m
    out.P_mid = y11_mdi(out.eta_m, out.eta_m_prime, p_dc)
    out.Q_Z = out.P_side * out.P_mid

    p_sp, e_x_sp = single_photon_loading(params, memory)
    out.Q11_Z = out.Q_Z * (p_sp / p) ** 2 * z * z * math.exp(-2.0 * z)

    d = mean_decoherence_error(p, T, memory)
    e_qm_sp = qm_error_single(e_x_sp, d)
    out.e_ph = e11_mdi("X", out.eta_m, out.eta_m_prime, e_qm_sp, p_dc)
    e_l = st.e_load
    if memory.decoherence is Decoherence.DEPHASING:
        e_qm = 2.0 * e_l * (1.0 - e_l)
    else:
        e_qm = qm_error_single(e_l, d)
    out.e_Z = e11_mdi("Z", out.eta_m, out.eta_m_prime, e_qm, p_dc)
    out.extras = {
        "p_load": p,
        "e_load": e_l,
        "p_load_sp": p_sp,
        "e_load_x_sp": e_x_sp,
        "e_decoherence": d,
        "e_qm_sp": e_qm_sp,
        "e_qm": e_qm,
        "R_s": R_s,
    }
    if math.isnan(out.e_ph) or math.isnan(out.e_Z):
        out.reason = "middle yield vanished"
        return out
    out.signed_rate_bps = signed_rate(R_s, out.Q11_Z, out.e_ph, out.Q_Z, out.e_Z, params.f_ec)
    out.rate_bps = max(0.0, out.signed_rate_bps)
    if out.rate_bps == 0.0:
        out.reason = NO_KEY
    return out


def mdi_dark_count_prob(params: SystemParams) -> float:
    return params.gamma_dc / MDI_REPETITION_RATE


def mdi_gain_z(a: float, b: float, eta: float, p_d: float, e_d: float) -> tuple[float, float]:
    """Z-basis gain and joint error probability for intensities ``a``, ``b``."""
    q = 1.0 - p_d
    zeta = eta * (a + b)
    x = eta * math.sqrt(a * b) / 2.0
    ez = math.exp(-zeta / 2.0)
    q_c = 2.0 * q * q * ez * (1.0 - q * math.exp(-eta * a / 2.0)) * (1.0 - q * math.exp(-eta * b / 2.0))
    q_e = 2.0 * p_d * q * q * ez * (bessel_i0(2.0 * x) - q * ez)
    return q_c + q_e, e_d * q_c + (1.0 - e_d) * q_e


def mdi_gain_x(a: float, b: float, eta: float, p_d: float, e_d: float) -> tuple[float, float]:
    """X-basis gain and joint error probability for intensities ``a``, ``b``."""
    zeta = eta * (a + b)
    x = eta * math.sqrt(a * b) / 2.0
    y = (1.0 - p_d) * math.exp(-zeta / 4.0)
    i0x = bessel_i0(x)
    i02x = bessel_i0(2.0 * x)
    gain = 2.0 * y * y * (1.0 + 2.0 * y * y - 4.0 * y * i0x + i02x)
    err = gain / 2.0 - (1.0 - 2.0 * e_d) * y * y * (i02x - 1.0)
    return gain, err


def mdi_asymptotic(params: SystemParams, z: float) -> AsymptoticBreakdown:
    """Asymptotic memoryless rate at signal intensity ``z`` on a 1 GHz clock."""
    if z <= 0:
        raise ValueError("z must be positive")
    p_d = mdi_dark_count_prob(params)
    eta = channel_transmittance(params) * params.eta_d
    e_d = 2.0 * params.e_mis * (1.0 - params.e_mis)
    q_z, err = mdi_gain_z(z, z, eta, p_d, e_d)
    y11 = y11_mdi(eta, eta, p_d)
    q = 1.0 - p_d
    out = AsymptoticBreakdown(P_side=1.0, N_L=1.0, eta_m=eta, eta_m_prime=eta)
    out.Q_Z = q_z
    out.P_mid = y11
    out.Q11_Z = z * z * math.exp(-2.0 * z) * y11
    out.e_Z = err / q_z if q_z > 0 else math.nan
    # Printed with the (1 - 2 p_d) factor although labelled as the X-basis form.
    out.e_ph = E0 - (E0 - e_d) * q * q * (1.0 - 2.0 * p_d) * eta * eta / (2.0 * y11) if y11 > 0 else math.nan
    out.extras = {"p_d": p_d, "e_d": e_d, "R_s": MDI_REPETITION_RATE}
    if math.isnan(out.e_Z) or math.isnan(out.e_ph):
        out.reason = "no detections"
        return out
    if out.e_Z >= 0.5:
        out.reason = "bit error rate at or above 1/2"
        out.signed_rate_bps = signed_rate(MDI_REPETITION_RATE, out.Q11_Z, out.e_ph, out.Q_Z, out.e_Z, params.f_ec)
        return out
    out.signed_rate_bps = signed_rate(MDI_REPETITION_RATE, out.Q11_Z, out.e_ph, out.Q_Z, out.e_Z, params.f_ec)
    out.rate_bps = max(0.0, out.signed_rate_bps)
    if out.rate_bps == 0.0:
        out.reason = NO_KEY
    return out
