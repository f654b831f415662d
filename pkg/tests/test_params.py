import math

import pytest

from maqkd.params import (
    IntensitySet,
    MemoryParams,
    SystemParams,
    builtin_memory,
    channel_transmittance,
    dark_count_prob,
    load_config,
    misalignment_half_width,
    repetition_rate,
    split_overrides,
)


@pytest.mark.parametrize("L, expected", [(0.0, 1.0), (100.0, 0.1030308), (44.0, 0.3678794)])
def test_channel_transmittance(L, expected):
    # exp(-100/44) = 0.10303080346..., exp(-1) = 0.36787944...
    assert channel_transmittance(SystemParams(L=L)) == pytest.approx(expected, abs=1e-6)


def test_transmittance_is_sqrt_of_end_to_end_and_decreasing():
    Ls = [0, 1, 10, 50, 100, 300, 500]
    vals = [channel_transmittance(SystemParams(L=L)) for L in Ls]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    for L, v in zip(Ls, vals):
        assert v * v == pytest.approx(math.exp(-L / 22.0), rel=1e-14)


def test_dark_count_prob():
    wv, ca = builtin_memory("WV"), builtin_memory("CA")
    assert dark_count_prob(SystemParams(gamma_dc=0.0), wv) == 0.0
    assert dark_count_prob(SystemParams(), wv) == pytest.approx(1.43e-9)
    assert dark_count_prob(SystemParams(), ca) == pytest.approx(2.4e-7)


@pytest.mark.parametrize("e, expected", [(0.0, 0.0), (0.005, 0.1224745), (0.03, 0.3)])
def test_half_width(e, expected):
    assert misalignment_half_width(SystemParams(e_mis=e)) == pytest.approx(expected, abs=1e-7)


@pytest.mark.parametrize(
    "tag, eff, T1, tau, rate",
    [("WV", 0.05, 120e-6, 1.43e-9, 518e6), ("CA", 0.76, 220e-3, 240e-9, 4.2e6), ("SV", 0.423, 200e-6, 142e-9, 7.04e6)],
)
def test_builtin_memories(tag, eff, T1, tau, rate):
    m = builtin_memory(tag.lower())
    assert (m.eta_w_eta_r0, m.T1, m.T2, m.tau_int, m.R_s) == (eff, T1, T1, tau, rate)
    assert m.N_r == 1 and m.tau_init == 0.0
    assert repetition_rate(SystemParams(), m) == rate


def test_wv_rate_close_to_inverse_interaction_time():
    m = builtin_memory("WV")
    assert abs(m.R_s * m.tau_int - 1.0) < 0.3


def test_unknown_memory():
    with pytest.raises(ValueError):
        builtin_memory("XX")


def test_explicit_rate_overrides_memory():
    assert repetition_rate(SystemParams(R_s=1e6), builtin_memory("WV")) == 1e6


@pytest.mark.parametrize(
    "kw",
    [dict(eta_d=1.5), dict(e_mis=0.6), dict(L=-1.0), dict(gamma_dc=-1.0), dict(R_s=0.0), dict(L=math.nan)],
)
def test_system_validation(kw):
    with pytest.raises(ValueError):
        SystemParams(**kw)


def test_memory_validation():
    with pytest.raises(ValueError):
        MemoryParams(0.5, 0.0, 1.0, 1e-9)
    with pytest.raises(ValueError):
        MemoryParams(0.5, 1.0, 1.0, 1e-9, N_r=0)
    with pytest.raises(ValueError):
        MemoryParams(1.5, 1.0, 1.0, 1e-9)


def test_intensity_validation():
    IntensitySet(0.5, 0.1, 0.01)
    with pytest.raises(ValueError):
        IntensitySet(0.5, 0.6, 0.01)
    with pytest.raises(ValueError):
        IntensitySet(0.5, 0.1, 0.01, p_z=0.5)
    assert IntensitySet(0.5, 0.1, 0.01).v == 0.5e-3


def test_config_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("memory = ca\ncollection-time = 60\nT1 = 0.1  # seconds\neta_d = 0.9\n")
    cfg = load_config(path)
    assert cfg == {"memory": "ca", "collection_time": 60, "T1": 0.1, "eta_d": 0.9}
    sys_kw, mem_kw = split_overrides(cfg)
    assert sys_kw == {"eta_d": 0.9} and mem_kw == {"T1": 0.1}
