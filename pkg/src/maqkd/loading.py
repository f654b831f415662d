"""Heralded loading of a memory from a phase-randomised weak coherent pulse.

A user's pulse (mean photon number ``mu``, transmissivity ``eta_a`` to the
side station) meets one photon of an ideal entangled pair (transmissivity
``eta_b``) on a polarisation Bell-state measurement. A single click in each
polarisation heralds the memory. The channel rotates the user's
polarisation by an angle ``theta`` that is averaged uniformly over
``[-Theta, Theta]``.

The trace coefficients below carry the 1/2 weight of each branch of the
entangled pair, so ``c_HH + c_VV`` is a probability per round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .numerics import QuadratureRule, integrate_theta
from .params import (
    MemoryParams,
    SystemParams,
    channel_transmittance,
    dark_count_prob,
    misalignment_half_width,
)

__all__ = [
    "LoadingStats",
    "c_coefficients_z",
    "x_integrands",
    "loading_stats",
    "loading_stats_z",
    "loading_stats_x",
    "loading_stats_raw",
    "single_photon_loading",
    "side_transmissivities",
]

Basis = Literal["Z", "X"]
_P_FLOOR = 1e-300


@dataclass(frozen=True)
class LoadingStats:
    """Loading probability and conditional flip probability for one intensity.

    ``e_load`` is NaN and ``defined`` is False when ``p_load`` is zero.
    """

    p_load: float
    e_load: float
    basis: str
    intensity: float

    @property
    def defined(self) -> bool:
        return not math.isnan(self.e_load)

    def e_or(self, fallback: float) -> float:
        return self.e_load if self.defined else fallback


def c_coefficients_z(theta, mu, eta_a, eta_b, p_dc):
    """Z-basis trace coefficients ``(c_HH, c_VV, c_HV)``.

    ``c_HH`` is the weight of heralding with the memory in the wrong state,
    ``c_VV`` the weight of the right one. Broadcasts over numpy arrays.
    """
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta) ** 2
    s = np.sin(theta) ** 2
    A = eta_a * mu
    q = 1.0 - p_dc
    pre = 0.5 * q * q

    # 1 - (1 - p_dc) exp(-A s / 2)
    f1 = -np.expm1(-0.5 * A * s) + p_dc * np.exp(-0.5 * A * s)
    f2 = (eta_b * c * A - 2.0 * eta_b + 4.0) * np.exp(0.5 * A * c) - 4.0 * (1.0 - eta_b) * q
    c_hh = pre * f1 * f2 * np.exp(-0.5 * A * (c + 1.0))

    k = eta_b * c * A - eta_b * A + 2.0 * eta_b - 4.0
    t1 = k * np.exp(-0.5 * A) * (np.expm1(-0.5 * A * c) - p_dc * np.exp(-0.5 * A * c))
    t2 = -4.0 * (1.0 - eta_b) * q * np.exp(-A) * (p_dc + np.expm1(0.5 * A * c))
    c_vv = pre * (t1 + t2)

    c_hv = 0.25 * np.cos(theta) * np.sin(theta) * q * q * eta_a * eta_b * mu * np.exp(-A)
    return c_hh, c_vv, c_hv


def x_integrands(theta, mu, eta_a, eta_b, p_dc):
    """X-basis integrands ``(p_integrand, e_integrand)`` before averaging.

    Each is a sum of four exponential terms whose constants cancel at
    ``mu -> 0``. The constant part is summed in closed form and the rest is
    carried through ``expm1``.
    """
    theta = np.asarray(theta, dtype=float)
    cs = np.cos(theta) * np.sin(theta)
    s2 = np.sin(theta) ** 2
    A = eta_a * mu
    q = 1.0 - p_dc

    x1 = -0.5 * A * (cs + 1.5)
    x2 = 0.25 * A * (2.0 * cs - 3.0)
    x3 = -0.5 * A
    x4 = -A
    a12 = q * (6.0 * eta_b - 8.0)
    a3 = 8.0 - 4.0 * eta_b
    a4 = 8.0 * q * q * (1.0 - eta_b)
    b1 = q * eta_b * (cs - 0.5)
    b2 = -q * eta_b * (cs + 0.5)
    alpha_sum = 4.0 * p_dc * eta_b + 8.0 * p_dc * p_dc * (1.0 - eta_b)

    e1, e2, e3 = np.exp(x1), np.exp(x2), np.exp(x3)
    common = (
        alpha_sum
        + a12 * (np.expm1(x1) + np.expm1(x2))
        + a3 * np.expm1(x3)
        + a4 * np.expm1(x4)
        + A * (b1 * e1 + b2 * e2)
    )
    p_int = 0.5 * q * q * (common + A * eta_b * e3)
    e_int = 0.25 * q * q * (common + A * 2.0 * eta_b * s2 * e3)
    return p_int, e_int


def side_transmissivities(params: SystemParams) -> tuple[float, float]:
    """``(eta_a, eta_b)``: user pulse and entangled-photon arm efficiencies."""
    eta_a = channel_transmittance(params) * params.eta_d
    eta_b = params.eta_c * params.eta_d
    return eta_a, eta_b


def loading_stats_raw(
    basis: Basis,
    mu: float,
    eta_a: float,
    eta_b: float,
    p_dc: float,
    half_width: float,
    rule: QuadratureRule | None = None,
) -> LoadingStats:
    """Loading statistics from bare transmissivities."""
    if mu < 0:
        raise ValueError("mu must be non-negative")
    if basis == "Z":
        hh = integrate_theta(lambda t: c_coefficients_z(t, mu, eta_a, eta_b, p_dc)[0], half_width, rule)
        vv = integrate_theta(lambda t: c_coefficients_z(t, mu, eta_a, eta_b, p_dc)[1], half_width, rule)
        p, wrong = hh + vv, hh
    elif basis == "X":
        p = integrate_theta(lambda t: x_integrands(t, mu, eta_a, eta_b, p_dc)[0], half_width, rule)
        wrong = integrate_theta(lambda t: x_integrands(t, mu, eta_a, eta_b, p_dc)[1], half_width, rule)
    else:
        raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")
    p = max(p, 0.0)
    if p < _P_FLOOR:
        return LoadingStats(0.0, math.nan, basis, float(mu))
    e = min(max(wrong / p, 0.0), 1.0)
    return LoadingStats(min(p, 1.0), e, basis, float(mu))


def loading_stats(
    basis: Basis,
    mu: float,
    params: SystemParams,
    memory: MemoryParams,
    rule: QuadratureRule | None = None,
) -> LoadingStats:
    eta_a, eta_b = side_transmissivities(params)
    return loading_stats_raw(
        basis,
        mu,
        eta_a,
        eta_b,
        dark_count_prob(params, memory),
        misalignment_half_width(params),
        rule,
    )


def loading_stats_z(mu: float, params: SystemParams, memory: MemoryParams,
                    rule: QuadratureRule | None = None) -> LoadingStats:
    return loading_stats("Z", mu, params, memory, rule)


def loading_stats_x(mu: float, params: SystemParams, memory: MemoryParams,
                    rule: QuadratureRule | None = None) -> LoadingStats:
    return loading_stats("X", mu, params, memory, rule)


def single_photon_loading(params: SystemParams, memory: MemoryParams) -> tuple[float, float]:
    """Loading probability and X-basis flip probability for a single photon."""
    from .asymptotic import e11_mdi, y11_mdi

    eta_a, eta_b = side_transmissivities(params)
    p_dc = dark_count_prob(params, memory)
    return (
        y11_mdi(eta_a, eta_b, p_dc),
        e11_mdi("X", eta_a, eta_b, params.e_mis, p_dc),
    )
