import math

import numpy as np
import pytest

from maqkd.asymptotic import decay_ratio, mean_dephasing_error, rounds_to_load
from maqkd.finite_key import DEFAULT_N_CUT
from maqkd.loading import loading_stats_raw
from maqkd.oracle import (
    McConfig,
    OracleRow,
    PlantedYields,
    Scenario,
    fock_heralding,
    race_dephasing_error,
    run_suite,
    simulate_estimator_coverage,
    simulate_loading,
    simulate_loading_raw,
    simulate_protocol_clock,
    stream,
)
from maqkd.params import IntensitySet, SystemParams, builtin_memory


def test_clock_certain_loading():
    c = simulate_protocol_clock(1.0, 1e-6, 1.0, 1.0, trials=10_000)
    assert c.N_L.mean == 1.0 and c.N_L.stderr == 0.0
    assert c.decay_ratio.mean == 1.0
    assert c.e_decoherence.mean == 0.0


def test_clock_half_probability():
    c = simulate_protocol_clock(0.5, 1e-6, 1.0, 1.0, trials=400_000, seed=1)
    assert rounds_to_load(0.5) == pytest.approx(8.0 / 3.0)
    assert c.N_L.within(8.0 / 3.0)


@pytest.mark.parametrize("p", [0.1, 0.9])
def test_clock_rounds_and_decay(p):
    T, T1 = 1e-3, 5e-3
    c = simulate_protocol_clock(p, T, T1, 1.0, trials=300_000, seed=2)
    assert c.N_L.within(rounds_to_load(p))
    assert c.decay_ratio.within(decay_ratio(p, T, T1))


def test_clock_without_dephasing():
    c = simulate_protocol_clock(0.01, 1e-6, math.inf, math.inf, trials=100_000)
    assert c.e_decoherence.mean == 0.0
    assert c.decay_ratio.mean == 1.0


def test_race_average_is_what_the_clock_simulates():
    # At a large loading probability the race average and the library's
    # dephasing average differ by (1 - p)/(1 - 2p), here 1.33.
    p, T, T2 = 0.2, 1e-3, 4e-3
    c = simulate_protocol_clock(p, T, 1.0, T2, trials=1_000_000, seed=4)
    race = race_dephasing_error(p, T, T2)
    lib = mean_dephasing_error(p, T, T2)
    assert race / lib == pytest.approx((1 - p) / (1 - 2 * p), rel=1e-12)
    assert c.e_decoherence.within(race)
    assert not c.e_decoherence.within(lib)


def test_depolarising_flip_share():
    p, T, T2 = 0.2, 1e-3, 4e-3
    deph = simulate_protocol_clock(p, T, 1.0, T2, "dephasing", trials=1_000_000, seed=5)
    depol = simulate_protocol_clock(p, T, 1.0, T2, "depolarising", trials=1_000_000, seed=6)
    se = math.hypot(deph.e_decoherence.stderr * 2 / 3, depol.e_decoherence.stderr)
    assert abs(depol.e_decoherence.mean - 2 / 3 * deph.e_decoherence.mean) < 3 * se


def test_clock_rejects_bad_probability():
    with pytest.raises(ValueError):
        simulate_protocol_clock(0.0, 1e-6, 1.0, 1.0, trials=10)


def test_vacuum_pulse_never_loads_without_darks():
    p, e = simulate_loading_raw("Z", 0.0, 0.5, 0.0, 0.0, 0.0, trials=50_000)
    assert p.mean == 0.0 and e.n == 0


def test_perfect_alignment_flips_only_through_multiphotons():
    for basis in ("Z", "X"):
        ref = loading_stats_raw(basis, 0.5, 0.3, 0.4, 0.0, 0.0)
        p, e = simulate_loading_raw(basis, 0.5, 0.3, 0.4, 0.0, 0.0, trials=400_000, seed=3)
        assert p.within(ref.p_load) and e.within(ref.e_load)
        # A single user photon and no darks: the stored state is always right.
        p1, e1 = simulate_loading_raw(basis, 1e-4, 0.3, 1.0, 0.0, 0.0, trials=400_000, seed=3)
        assert e1.mean <= 2 * e1.stderr + 1e-3


def test_heralding_probabilities_are_sub_normalised():
    theta = np.linspace(-0.3, 0.3, 7)
    for basis in ("Z", "X"):
        for n in range(5):
            for survives in (True, False):
                wrong, right = fock_heralding(basis, n, survives, theta, 1e-3)
                assert np.all(wrong >= 0) and np.all(right >= 0)
                assert np.all(wrong + right <= 1 + 1e-12)


def test_loading_needs_enough_trials():
    with pytest.raises(ValueError):
        simulate_loading("Z", 0.5, SystemParams(L=100.0), builtin_memory("WV"), trials=100)


def test_streams_independent_of_chunking_and_reproducible():
    a = stream(3, Scenario.LOADING_Z, 0).random(5)
    b = stream(3, "loading_z", 0).random(5)
    c = stream(3, Scenario.LOADING_Z, 1).random(5)
    d = stream(3, Scenario.LOADING_X, 0).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)
    x = simulate_loading("Z", 0.5, SystemParams(L=100.0), builtin_memory("WV"), trials=20_000, seed=9)
    y = simulate_loading("Z", 0.5, SystemParams(L=100.0), builtin_memory("WV"), trials=20_000, seed=9)
    assert x == y


def test_mc_config_validation():
    with pytest.raises(ValueError):
        McConfig(trials=0)
    assert McConfig(trials=5, scenario="mdi_gain").scenario is Scenario.MDI_GAIN


def test_coverage_on_expected_counts_is_complete():
    frac, log = simulate_estimator_coverage(repetitions=20, sample=False, seed=1)
    assert frac == 1.0 and len(log) == 20


def test_coverage_with_zeroed_decoys():
    def dark(rng):
        y = np.zeros((DEFAULT_N_CUT + 1, DEFAULT_N_CUT + 1))
        return PlantedYields(y, np.full(y.shape, 0.5))

    I = IntensitySet(z=0.5, w1=0.2, w2=0.05, v=5e-4, p_z=0.4, p_w1=0.2, p_w2=0.2, p_v=0.2)
    # Photons beyond the table always click, but their weight is ~1e-11.
    frac, log = simulate_estimator_coverage(dark, repetitions=5, intensities=I, sample=True)
    assert frac == 1.0
    assert all(r["M11_L"] == 0.0 for r in log)


def test_coverage_validates_repetitions():
    with pytest.raises(ValueError):
        simulate_estimator_coverage(repetitions=0)


def test_oracle_row_scoring():
    assert OracleRow("s", "q", "pt", 0.5, 0.5, 0.01).ok
    assert not OracleRow("s", "q", "pt", 0.5, 0.6, 0.01).ok
    assert OracleRow("s", "q", "pt", 1e-4, 0.0, 0.0, n=1000).z_score == pytest.approx(-math.sqrt(1000 * 1e-4 / (1 - 1e-4)))
    assert OracleRow("c", "coverage", "pt", 0.99, 1.0, 0.0, 100, threshold=True).ok
    assert not OracleRow("c", "coverage", "pt", 0.99, 0.98, 0.0, 100, threshold=True).ok


def test_suite_row_shape():
    rows = run_suite("mdi_gain", trials=20_000)
    assert len(rows) == 20
    assert {r.quantity for r in rows} == {"Q_X", "E_X", "Q_Z", "E_Z"}
    assert all(r.scenario == "mdi_gain" for r in rows)
    with pytest.raises(ValueError):
        run_suite("nonsense")


@pytest.mark.parametrize("scenario", ["loading_z", "loading_x", "nl_and_eta", "dephasing_avg", "mdi_gain"])
def test_suite_agrees_at_moderate_trials(scenario):
    rows = run_suite(scenario, trials=200_000, seed=11)
    bad = [(r.quantity, r.point, r.z_score) for r in rows if not r.ok]
    assert not bad
