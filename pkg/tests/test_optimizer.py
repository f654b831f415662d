import math

import numpy as np
import pytest

from maqkd.finite_key import ma_finite
from maqkd.optimizer import (
    Objective,
    OptimizationConfig,
    block_size,
    decode,
    encode,
    evaluate,
    optimize_rate,
)
from maqkd.params import MDI_REPETITION_RATE, IntensitySet, SystemParams, builtin_memory, repetition_rate

WV = builtin_memory("WV")
CA = builtin_memory("CA")
SMALL = OptimizationConfig(population=8, restarts=1, max_evals=80)


def test_decode_always_valid():
    cfg = OptimizationConfig()
    rng = np.random.default_rng(0)
    for _ in range(500):
        I = decode(rng.normal(scale=6.0, size=6), cfg)
        assert cfg.z_bounds[0] <= I.z <= cfg.z_bounds[1]
        assert I.v < I.w2 < I.w1 < I.z
        assert sum(I.probabilities) == pytest.approx(1.0, abs=1e-12)
        assert min(I.probabilities) >= cfg.p_min * (1 - 1e-9)


def test_encode_decode_round_trip():
    cfg = OptimizationConfig()
    I = IntensitySet(z=0.6, w1=0.2, w2=0.03, v=cfg.v, p_z=0.55, p_w1=0.15, p_w2=0.2, p_v=0.1)
    J = decode(encode(I, cfg), cfg)
    for a, b in zip((I.z, I.w1, I.w2, *I.probabilities), (J.z, J.w1, J.w2, *J.probabilities)):
        assert b == pytest.approx(a, rel=1e-9)


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizationConfig(z_bounds=(0.5, 0.1))
    with pytest.raises(ValueError):
        OptimizationConfig(z_bounds=(1e-4, 1.0))
    with pytest.raises(ValueError):
        OptimizationConfig(max_evals=0)
    with pytest.raises(ValueError):
        OptimizationConfig(p_min=0.3)


def test_block_size_from_collection_time():
    p = SystemParams(L=100.0)
    assert block_size("mdi_finite", p, None, T_col=2.0) == pytest.approx(2.0 * MDI_REPETITION_RATE)
    assert block_size("ma_finite", p, WV, T_col=2.0) == pytest.approx(2.0 * repetition_rate(p, WV))
    assert block_size("ma_finite", p, WV, N=1e9) == 1e9
    with pytest.raises(ValueError):
        block_size("ma_finite", p, WV, N=1e9, T_col=1.0)
    with pytest.raises(ValueError):
        block_size("ma_finite", p, WV)


def test_memory_required():
    with pytest.raises(ValueError):
        optimize_rate("ma_asymptotic", SystemParams(L=10.0))
    with pytest.raises(ValueError):
        evaluate("mdi_finite", SystemParams(L=10.0), None, IntensitySet(z=0.5, w1=0.1, w2=0.01))


def test_objective_flags():
    assert Objective.MA_FINITE.finite and Objective.MA_FINITE.memory_assisted
    assert not Objective.MDI_ASYMPTOTIC.finite and not Objective.MDI_ASYMPTOTIC.memory_assisted


def test_memoryless_signal_interior_at_zero_distance():
    cfg = OptimizationConfig()
    r = optimize_rate("mdi_asymptotic", SystemParams(L=0.0), config=cfg)
    assert r.rate_bps > 0
    assert cfg.z_bounds[0] < r.intensities.z < cfg.z_bounds[1]
    # A local maximum: nearby signals do no better.
    for f in (0.9, 1.1):
        z = r.intensities.z * f
        near = IntensitySet(z=z, w1=z / 2, w2=z / 8)
        assert evaluate("mdi_asymptotic", SystemParams(L=0.0), None, near).rate_bps <= r.rate_bps


def test_asymptotic_memory_assisted_positive():
    r = optimize_rate("ma_asymptotic", SystemParams(L=200.0), CA)
    assert r.rate_bps > 0
    assert r.result.reason == ""


def test_deterministic_for_fixed_seed():
    a = optimize_rate("mdi_finite", SystemParams(L=50.0), N=1e12, config=SMALL)
    b = optimize_rate("mdi_finite", SystemParams(L=50.0), N=1e12, config=SMALL)
    assert a.rate_bps == b.rate_bps and a.intensities == b.intensities


def test_warm_start_never_worse_than_start():
    p = SystemParams(L=50.0)
    warm = IntensitySet(z=0.69, w1=0.227, w2=0.0422, v=5e-4, p_z=0.856, p_w1=0.0093, p_w2=0.0899, p_v=0.0448)
    start = evaluate("mdi_finite", p, None, warm, N=1e12).rate_bps
    r = optimize_rate("mdi_finite", p, N=1e12, config=SMALL, warm_start=warm)
    assert r.rate_bps >= start


@pytest.mark.slow
def test_beats_reference_point():
    p = SystemParams(L=150.0)
    ref = IntensitySet(z=0.5, w1=0.1, w2=0.01, v=5e-4, p_z=0.9, p_w1=1 / 30, p_w2=1 / 30, p_v=1 / 30)
    r = optimize_rate("ma_finite", p, WV, N=1e10)
    assert r.rate_bps >= ma_finite(p, WV, ref, 1e10).rate_bps


@pytest.mark.slow
# Memoryless finite rates at N = 1e10 vanish near 98 km, so that case sits at 50 km.
@pytest.mark.parametrize("objective,L", [("ma_finite", 100.0), ("mdi_finite", 50.0)])
def test_doubling_budget_changes_little(objective, L):
    p = SystemParams(L=L)
    mem = WV if objective == "ma_finite" else None
    a = optimize_rate(objective, p, mem, N=1e10)
    b = optimize_rate(objective, p, mem, N=1e10, config=OptimizationConfig(max_evals=800))
    assert a.rate_bps > 0
    assert abs(b.rate_bps / a.rate_bps - 1) < 0.01
