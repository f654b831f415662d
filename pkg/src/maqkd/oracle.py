"""Round-by-round Monte-Carlo simulations used to cross-check the closed forms.

Every simulation draws from Philox streams keyed by ``(seed, scenario,
chunk)``, so results do not depend on how trials are split across workers.

Loading is simulated per round: a rotation angle, a thinned Poisson photon
number for the user pulse and the survival of the entangled photon are
drawn, and the heralding outcome is then sampled from the exact Fock-state
click distribution of the polarisation Bell-state measurement. Photon
counting alone cannot reproduce that distribution because the user photons
and the entangled photon interfere on the beam splitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterator

import numpy as np

from .counts import ObservedCounts
from .finite_key import DEFAULT_N_CUT, decoy_lp_e11, decoy_lp_m11
from .loading import side_transmissivities
from .params import (
    X_LABELS,
    Decoherence,
    IntensitySet,
    MemoryParams,
    SystemParams,
    dark_count_prob,
    misalignment_half_width,
)

__all__ = [
    "Scenario",
    "McConfig",
    "McEstimate",
    "PlantedYields",
    "random_planted_yields",
    "simulate_loading",
    "simulate_loading_raw",
    "simulate_protocol_clock",
    "simulate_mdi_gain",
    "simulate_estimator_coverage",
    "stream",
    "OracleRow",
    "race_dephasing_error",
    "run_suite",
    "planted_counts",
    "fock_heralding",
]

CHUNK = 1 << 20


class Scenario(str, Enum):
    LOADING_Z = "loading_z"
    LOADING_X = "loading_x"
    NL_AND_ETA = "nl_and_eta"
    DEPHASING_AVG = "dephasing_avg"
    MDI_GAIN = "mdi_gain"
    ESTIMATOR_COVERAGE = "estimator_coverage"


_SCENARIO_ID = {s: i for i, s in enumerate(Scenario)}


@dataclass(frozen=True)
class McConfig:
    trials: int
    seed: int = 0
    scenario: Scenario = Scenario.LOADING_Z

    def __post_init__(self) -> None:
        if self.trials <= 0:
            raise ValueError("trials must be positive")
        object.__setattr__(self, "scenario", Scenario(self.scenario))


@dataclass(frozen=True)
class McEstimate:
    """A sample mean and its standard error."""

    mean: float
    stderr: float
    n: int

    def within(self, target: float, sigmas: float = 3.0) -> bool:
        return abs(self.mean - target) <= sigmas * self.stderr


def stream(seed: int, scenario: Scenario | str, chunk: int) -> np.random.Generator:
    """Independent generator for one chunk of one scenario."""
    ss = np.random.SeedSequence([int(seed), _SCENARIO_ID[Scenario(scenario)], int(chunk)])
    return np.random.Generator(np.random.Philox(ss))


def _chunks(trials: int, seed: int, scenario: Scenario) -> Iterator[tuple[int, np.random.Generator]]:
    for idx, start in enumerate(range(0, trials, CHUNK)):
        yield min(CHUNK, trials - start), stream(seed, scenario, idx)


def _bernoulli_mean(hits: int, n: int) -> McEstimate:
    p = hits / n if n else math.nan
    se = math.sqrt(max(p * (1.0 - p), 0.0) / n) if n else math.nan
    return McEstimate(p, se, n)


def _sample_mean(total: float, total_sq: float, n: int) -> McEstimate:
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    return McEstimate(mean, math.sqrt(var / max(n - 1, 1)), n)


# --------------------------------------------------------------- loading


def _bs_amplitude(n: int, k: int, j: int) -> float:
    """Amplitude for ``j`` photons in the left output when ``n`` photons enter
    one port and ``k`` (0 or 1) the other of a balanced beam splitter."""
    if k == 0:
        return math.sqrt(math.comb(n, j)) / 2.0 ** (n / 2.0) if 0 <= j <= n else 0.0
    if not 0 <= j <= n + 1:
        return 0.0
    c = (math.comb(n, j - 1) if j >= 1 else 0) - (math.comb(n, j) if j <= n else 0)
    return c * math.sqrt(math.factorial(j) * math.factorial(n + 1 - j) / math.factorial(n)) / 2.0 ** ((n + 1) / 2.0)


def _one_click(left: int, right: int, p_dc: float) -> tuple[float, float]:
    """Probabilities that only the left, or only the right, detector fires."""
    pl = 1.0 if left > 0 else p_dc
    pr = 1.0 if right > 0 else p_dc
    return pl * (1.0 - pr), pr * (1.0 - pl)


@lru_cache(maxsize=None)
def _fock_terms(n_photons: int, survives: bool) -> tuple:
    """Click-pattern amplitudes for ``n_photons`` user photons.

    Returns tuples ``(nh, branch, jh, Jh, jv, Jv, coeff)``: the user sends
    ``nh`` photons in H and the rest in V, the entangled photon is in
    ``branch`` (0 = H, 1 = V, 2/3 = lost with the memory in H/V), and
    ``coeff`` multiplies ``c_h**nh * c_v**(n-nh)`` in the amplitude.
    """
    out = []
    for nh in range(n_photons + 1):
        nv = n_photons - nh
        binom = math.sqrt(math.comb(n_photons, nh))
        branches = ((0, 1, 0), (1, 0, 1)) if survives else ((2, 0, 0), (3, 0, 0))
        for branch, kh, kv in branches:
            for jh in range(nh + kh + 1):
                ah = _bs_amplitude(nh, kh, jh)
                if ah == 0.0:
                    continue
                for jv in range(nv + kv + 1):
                    av = _bs_amplitude(nv, kv, jv)
                    if av == 0.0:
                        continue
                    out.append((nh, branch, jh, nh + kh - jh, jv, nv + kv - jv, binom * ah * av / math.sqrt(2.0)))
    return tuple(out)


def fock_heralding(basis: str, n_photons: int, survives: bool, theta: np.ndarray, p_dc: float):
    """Joint probabilities ``(p_wrong, p_right)`` of heralding a load.

    ``theta`` is the channel rotation. In the Z basis the user sends H; in
    the X basis it sends the state that should leave the memory in A, and
    the heralded pattern decides the Pauli correction.
    """
    theta = np.asarray(theta, dtype=float)
    if basis == "Z":
        ch, cv = np.cos(theta), np.sin(theta)
    elif basis == "X":
        ch = (np.sin(theta) + np.cos(theta)) / math.sqrt(2.0)
        cv = (np.sin(theta) - np.cos(theta)) / math.sqrt(2.0)
    else:
        raise ValueError("basis must be 'Z' or 'X'")

    amps: dict[tuple[int, int, int, int], dict[int, np.ndarray]] = {}
    for nh, branch, jh, Jh, jv, Jv, coeff in _fock_terms(n_photons, survives):
        a = coeff * ch ** nh * cv ** (n_photons - nh)
        slot = amps.setdefault((jh, Jh, jv, Jv), {})
        slot[branch] = slot.get(branch, 0.0) + a

    wrong = np.zeros_like(theta)
    right = np.zeros_like(theta)
    for (jh, Jh, jv, Jv), d in amps.items():
        h_sides = _one_click(jh, Jh, p_dc)
        v_sides = _one_click(jv, Jv, p_dc)
        for sh, ph in enumerate(h_sides):
            for sv, pv in enumerate(v_sides):
                w = ph * pv
                if w == 0.0:
                    continue
                if not survives:
                    pm = sum(x * x for x in d.values())
                    wrong = wrong + 0.5 * w * pm
                    right = right + 0.5 * w * pm
                    continue
                aH = d.get(0, 0.0)
                aV = d.get(1, 0.0)
                if basis == "Z":
                    wrong = wrong + w * aH * aH
                    right = right + w * aV * aV
                else:
                    pD = 0.5 * (aH + aV) ** 2
                    pA = 0.5 * (aH - aV) ** 2
                    if sh == sv:
                        wrong, right = wrong + w * pD, right + w * pA
                    else:
                        wrong, right = wrong + w * pA, right + w * pD
    return wrong, right


def simulate_loading_raw(
    basis: str,
    mu: float,
    eta_a: float,
    eta_b: float,
    p_dc: float,
    half_width: float,
    trials: int,
    seed: int = 0,
) -> tuple[McEstimate, McEstimate]:
    """Loading probability and flip rate from simulated rounds."""
    if trials < 1:
        raise ValueError("trials must be positive")
    scenario = Scenario.LOADING_Z if basis == "Z" else Scenario.LOADING_X
    loads = 0
    flips = 0
    for n, rng in _chunks(trials, seed, scenario):
        theta = rng.uniform(-half_width, half_width, n)
        photons = rng.poisson(eta_a * mu, n)
        survives = rng.random(n) < eta_b
        u = rng.random(n)
        p_wrong = np.zeros(n)
        p_right = np.zeros(n)
        for k in np.unique(photons):
            for s in (True, False):
                sel = (photons == k) & (survives == s)
                if np.any(sel):
                    p_wrong[sel], p_right[sel] = fock_heralding(basis, int(k), s, theta[sel], p_dc)
        flip = u < p_wrong
        load = u < p_wrong + p_right
        loads += int(load.sum())
        flips += int(flip.sum())
    return _bernoulli_mean(loads, trials), _bernoulli_mean(flips, loads)


def simulate_loading(
    basis: str, mu: float, params: SystemParams, memory: MemoryParams, trials: int, seed: int = 0
) -> tuple[float, float, tuple[float, float]]:
    """``(p_load_hat, e_load_hat, (stderr_p, stderr_e))``."""
    if trials < 10_000:
        raise ValueError("use at least 10^4 trials")
    eta_a, eta_b = side_transmissivities(params)
    p, e = simulate_loading_raw(
        basis, mu, eta_a, eta_b, dark_count_prob(params, memory), misalignment_half_width(params), trials, seed
    )
    return p.mean, e.mean, (p.stderr, e.stderr)


# ---------------------------------------------------------- protocol clock


@dataclass(frozen=True)
class ClockEstimate:
    N_L: McEstimate
    decay_ratio: McEstimate
    e_decoherence: McEstimate


def simulate_protocol_clock(
    p_load: float,
    round_time: float,
    T1: float,
    T2: float,
    decoherence: Decoherence | str = Decoherence.DEPHASING,
    trials: int = 1_000_000,
    seed: int = 0,
) -> ClockEstimate:
    """Two memories race to load; the first one waits and decays.

    The waiting memory's efficiency shrinks by ``exp(-t/T1)``. Its state
    keeps its phase with probability ``(1 + exp(-t/T2))/2``; otherwise
    dephasing applies Z, while depolarisation applies one of X, Y, Z with
    equal weight. An X-basis state is flipped by Y and Z.
    """
    if not 0.0 < p_load <= 1.0:
        raise ValueError("p_load must lie in (0, 1]")
    decoherence = Decoherence(decoherence)
    nl = [0.0, 0.0]
    ratio = [0.0, 0.0]
    flips = 0
    for n, rng in _chunks(trials, seed, Scenario.NL_AND_ETA):
        ta = rng.geometric(p_load, n)
        tb = rng.geometric(p_load, n)
        rounds = np.maximum(ta, tb).astype(float)
        wait = np.abs(ta - tb) * round_time
        r = np.exp(-wait / T1)
        keep = 0.5 * (1.0 + np.exp(-wait / T2))
        hit = rng.random(n) >= keep
        if decoherence is Decoherence.DEPHASING:
            flipped = hit
        else:
            pauli = rng.integers(0, 3, n)  # 0 = X, 1 = Y, 2 = Z
            flipped = hit & (pauli != 0)
        nl[0] += rounds.sum()
        nl[1] += (rounds * rounds).sum()
        ratio[0] += r.sum()
        ratio[1] += (r * r).sum()
        flips += int(flipped.sum())
    return ClockEstimate(
        _sample_mean(nl[0], nl[1], trials),
        _sample_mean(ratio[0], ratio[1], trials),
        _bernoulli_mean(flips, trials),
    )


def race_dephasing_error(p_load: float, round_time: float, T2: float) -> float:
    """Exact mean phase-flip probability of :func:`simulate_protocol_clock`.

    Averages ``(1 - exp(-D T / T2)) / 2`` over ``D = |ta - tb|`` for two
    independent geometric loading times. It exceeds the library's
    :func:`~maqkd.asymptotic.mean_dephasing_error` by the factor
    ``(1 - p) / (1 - 2p)``, which is negligible at working points where
    ``p_load`` is small.
    """
    s = math.exp(-round_time / T2)
    q = 1.0 - p_load
    return q * (1.0 - s) / ((2.0 - p_load) * (1.0 - q * s))


# ---------------------------------------------------------------- MDI gains


def simulate_mdi_gain(
    basis: str,
    a: float,
    b: float,
    eta: float,
    p_d: float,
    e_mis: float,
    trials: int,
    seed: int = 0,
) -> tuple[McEstimate, McEstimate]:
    """Gain and joint error probability of the memoryless Bell measurement.

    Both users send phase-randomised coherent states with random bits. Each
    leg flips the polarisation with probability ``e_mis``. A success is one
    H and one V click out of the four detectors. Returns the success rate
    and the rate of successes carrying a bit error.
    """
    if basis not in ("Z", "X"):
        raise ValueError("basis must be 'Z' or 'X'")
    successes = 0
    errors = 0
    s2 = math.sqrt(2.0)
    for n, rng in _chunks(trials, seed, Scenario.MDI_GAIN):
        bit_a = rng.integers(0, 2, n)
        bit_b = rng.integers(0, 2, n)
        sent_a = bit_a ^ (rng.random(n) < e_mis)
        sent_b = bit_b ^ (rng.random(n) < e_mis)
        phase = np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, n))
        amp_a = math.sqrt(eta * a)
        amp_b = math.sqrt(eta * b) * phase
        if basis == "Z":
            ah, av = amp_a * (sent_a == 0), amp_a * (sent_a == 1)
            bh, bv = amp_b * (sent_b == 0), amp_b * (sent_b == 1)
        else:
            sign_a = np.where(sent_a == 0, 1.0, -1.0)
            sign_b = np.where(sent_b == 0, 1.0, -1.0)
            ah, av = np.full(n, amp_a / s2), amp_a * sign_a / s2
            bh, bv = amp_b / s2, amp_b * sign_b / s2
        intensities = (
            np.abs(ah + bh) ** 2 / 2.0,  # H, port c
            np.abs(ah - bh) ** 2 / 2.0,  # H, port d
            np.abs(av + bv) ** 2 / 2.0,  # V, port c
            np.abs(av - bv) ** 2 / 2.0,  # V, port d
        )
        clicks = [rng.random(n) < 1.0 - (1.0 - p_d) * np.exp(-I) for I in intensities]
        hc, hd, vc, vd = clicks
        ok = (hc ^ hd) & (vc ^ vd)
        same_port = hc == vc
        if basis == "Z":
            err = ok & (bit_a == bit_b)
        else:
            err = ok & (same_port != (bit_a == bit_b))
        successes += int(ok.sum())
        errors += int(err.sum())
    return _bernoulli_mean(successes, trials), _bernoulli_mean(errors, trials)


# -------------------------------------------------------- estimator coverage


@dataclass(frozen=True)
class PlantedYields:
    """Photon-number-resolved yields and error rates chosen explicitly."""

    yields: np.ndarray  # Y[n, m]
    error_rates: np.ndarray  # e[n, m]

    @property
    def n_max(self) -> int:
        return self.yields.shape[0] - 1


def random_planted_yields(rng: np.random.Generator, n_max: int = 30) -> PlantedYields:
    """Random but physically shaped yields: two lossy arms plus background."""
    eta_a = 10.0 ** rng.uniform(-3.0, -0.5)
    eta_b = 10.0 ** rng.uniform(-3.0, -0.5)
    bg = 10.0 ** rng.uniform(-8.0, -5.0)
    n = np.arange(n_max + 1)
    da = 1.0 - (1.0 - eta_a) ** n
    db = 1.0 - (1.0 - eta_b) ** n
    y = np.outer(da, db) * rng.uniform(0.3, 0.6) + bg
    y = np.minimum(y, 1.0)
    e = rng.uniform(0.2, 0.5, size=y.shape)
    e[1, 1] = rng.uniform(0.0, 0.1)
    return PlantedYields(y, e)


def _poisson_row(mu: float, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1)
    if mu == 0.0:
        return (n == 0).astype(float)
    return np.exp(n * math.log(mu) - mu - np.array([math.lgamma(k + 1) for k in n]))


def planted_counts(planted: PlantedYields, intensities: IntensitySet, N: float) -> tuple[ObservedCounts, float, float]:
    """Expected decoy counts plus the true single-photon totals ``(M11, E11)``.

    Photon numbers beyond the table are assigned yield 1 and error 1/2.
    """
    lab = intensities.labelled()
    nm = planted.n_max
    rows = {k: _poisson_row(mu, nm) for k, (mu, _) in lab.items()}
    M: dict = {}
    E: dict = {}
    ye = planted.yields * planted.error_rates
    for a in ("z",) + X_LABELS:
        for b in ("z",) + X_LABELS:
            if (a == "z") != (b == "z"):
                continue
            pa, pb = rows[a], rows[b]
            tail = 1.0 - pa.sum() * pb.sum()
            q = pa @ planted.yields @ pb + tail
            qe = pa @ ye @ pb + 0.5 * tail
            w = N * lab[a][1] * lab[b][1]
            M[(a, b)] = w * q
            E[(a, b)] = w * qe
    p1 = sum(p * mu * math.exp(-mu) for mu, p in lab.values())
    m11 = N * p1 * p1 * planted.yields[1, 1]
    e11 = m11 * planted.error_rates[1, 1]
    return ObservedCounts(N=N, counts=M, errors=E), m11, e11


def simulate_estimator_coverage(
    generator: Callable[[np.random.Generator], PlantedYields] = random_planted_yields,
    epsilon: float = 1e-3,
    repetitions: int = 100,
    seed: int = 0,
    *,
    intensities: IntensitySet | None = None,
    N: float = 1e10,
    sample: bool = True,
    n_cut: int = DEFAULT_N_CUT,
) -> tuple[float, list[dict]]:
    """Fraction of instances with ``M11_L <= M11`` and ``E11_U >= E11``."""
    from .counts import sample_counts

    if repetitions < 1:
        raise ValueError("repetitions must be positive")
    I = intensities or IntensitySet(z=0.5, w1=0.2, w2=0.05, v=5e-4, p_z=0.4, p_w1=0.2, p_w2=0.2, p_v=0.2)
    covered = 0
    log: list[dict] = []
    for rep in range(repetitions):
        rng = stream(seed, Scenario.ESTIMATOR_COVERAGE, rep)
        planted = generator(rng)
        nominal, m11, e11 = planted_counts(planted, I, N)
        observed = sample_counts(nominal, rng) if sample else nominal
        m_l = decoy_lp_m11(observed, I, epsilon, n_cut)
        e_u = decoy_lp_e11(observed, I, epsilon, n_cut)
        ok = m_l <= m11 and (not math.isnan(e_u)) and e_u >= e11
        covered += ok
        log.append({"M11": m11, "M11_L": m_l, "E11": e11, "E11_U": e_u, "covered": ok})
    return covered / repetitions, log


# --------------------------------------------------------------- test suites


@dataclass(frozen=True)
class OracleRow:
    scenario: str
    quantity: str
    point: str
    closed_form: float
    mean: float
    stderr: float
    n: int = 0
    threshold: bool = False

    @property
    def z_score(self) -> float:
        se = self.stderr
        if not se > 0 and self.n > 0 and 0.0 < self.closed_form < 1.0:
            # No spread in the sample (e.g. zero errors): use the binomial
            # spread implied by the closed form instead.
            se = math.sqrt(self.closed_form * (1.0 - self.closed_form) / self.n)
        if se > 0:
            return (self.mean - self.closed_form) / se
        return 0.0 if self.mean == self.closed_form else math.inf

    @property
    def ok(self) -> bool:
        if self.threshold:
            return self.mean >= self.closed_form
        return abs(self.z_score) <= 3.0


# (memory, L km, mu): loading checks at the protocol's working points.
LOADING_GRID = (("WV", 100.0, 0.5), ("WV", 300.0, 0.4), ("CA", 200.0, 0.3), ("CA", 300.0, 1.0), ("SV", 50.0, 0.1))
# (memory, L km, z): the clock runs with the signal's loading probability.
CLOCK_GRID = (("WV", 200.0, 0.4), ("WV", 340.0, 0.4), ("CA", 170.0, 0.4), ("CA", 300.0, 0.4), ("SV", 250.0, 0.4))
# (L km, a, b) for the memoryless Bell measurement.
MDI_GRID = ((0.0, 0.4, 0.4), (50.0, 0.1, 0.02), (100.0, 0.4, 0.1), (150.0, 0.02, 0.4), (200.0, 0.5, 0.5))


def _loading_rows(basis: str, trials: int, seed: int) -> list[OracleRow]:
    from .loading import loading_stats
    from .params import builtin_memory

    rows = []
    for k, (tag, L, mu) in enumerate(LOADING_GRID):
        params = SystemParams(L=L)
        mem = builtin_memory(tag)
        ref = loading_stats(basis, mu, params, mem)
        eta_a, eta_b = side_transmissivities(params)
        p, e = simulate_loading_raw(
            basis, mu, eta_a, eta_b, dark_count_prob(params, mem), misalignment_half_width(params), trials, seed + k
        )
        point = f"{tag} L={L:g} mu={mu:g}"
        scen = f"loading_{basis.lower()}"
        rows.append(OracleRow(scen, f"p_load_{basis}", point, ref.p_load, p.mean, p.stderr, p.n))
        rows.append(OracleRow(scen, f"e_load_{basis}", point, ref.e_load, e.mean, e.stderr, e.n))
    return rows


def _clock_rows(trials: int, seed: int, which: str) -> list[OracleRow]:
    from .asymptotic import decay_ratio, mean_dephasing_error, rounds_to_load
    from .loading import loading_stats
    from .params import builtin_memory, repetition_rate

    rows = []
    for k, (tag, L, z) in enumerate(CLOCK_GRID):
        params = SystemParams(L=L)
        mem = builtin_memory(tag)
        p = loading_stats("Z", z, params, mem).p_load
        T = 1.0 / repetition_rate(params, mem)
        point = f"{tag} L={L:g} p_load={p:.4g}"
        if which == "nl_and_eta":
            c = simulate_protocol_clock(p, T, mem.T1, mem.T2, Decoherence.DEPHASING, trials, seed + k)
            rows.append(OracleRow(which, "N_L", point, rounds_to_load(p), c.N_L.mean, c.N_L.stderr, c.N_L.n))
            rows.append(OracleRow(which, "eta_ratio", point, decay_ratio(p, T, mem.T1),
                                  c.decay_ratio.mean, c.decay_ratio.stderr, c.decay_ratio.n))
        else:
            ref = mean_dephasing_error(p, T, mem.T2)
            c = simulate_protocol_clock(p, T, mem.T1, mem.T2, Decoherence.DEPHASING, trials, seed + k)
            rows.append(OracleRow(which, "e_deph", point, ref, c.e_decoherence.mean, c.e_decoherence.stderr, c.e_decoherence.n))
            d = simulate_protocol_clock(p, T, mem.T1, mem.T2, Decoherence.DEPOLARISING, trials, seed + 100 + k)
            rows.append(OracleRow(which, "e_depol", point, 2.0 / 3.0 * ref,
                                  d.e_decoherence.mean, d.e_decoherence.stderr, d.e_decoherence.n))
    return rows


def _mdi_rows(trials: int, seed: int) -> list[OracleRow]:
    from .asymptotic import mdi_dark_count_prob, mdi_gain_x, mdi_gain_z
    from .params import channel_transmittance

    rows = []
    for k, (L, a, b) in enumerate(MDI_GRID):
        params = SystemParams(L=L)
        eta = channel_transmittance(params) * params.eta_d
        p_d = mdi_dark_count_prob(params)
        e_d = 2.0 * params.e_mis * (1.0 - params.e_mis)
        point = f"L={L:g} a={a:g} b={b:g}"
        for basis, fn in (("X", mdi_gain_x), ("Z", mdi_gain_z)):
            gain, err = fn(a, b, eta, p_d, e_d)
            g, e = simulate_mdi_gain(basis, a, b, eta, p_d, params.e_mis, trials, seed + k)
            rows.append(OracleRow("mdi_gain", f"Q_{basis}", point, gain, g.mean, g.stderr, g.n))
            rows.append(OracleRow("mdi_gain", f"E_{basis}", point, err, e.mean, e.stderr, e.n))
    return rows


def run_suite(scenario: str, trials: int = 1_000_000, seed: int = 0) -> list[OracleRow]:
    """Closed form versus simulation on the fixed grid of one scenario (or ``"all"``)."""
    if scenario == "all":
        out: list[OracleRow] = []
        for s in Scenario:
            out.extend(run_suite(s.value, trials, seed))
        return out
    s = Scenario(scenario)
    if s is Scenario.LOADING_Z:
        return _loading_rows("Z", trials, seed)
    if s is Scenario.LOADING_X:
        return _loading_rows("X", trials, seed)
    if s is Scenario.NL_AND_ETA:
        return _clock_rows(trials, seed, "nl_and_eta")
    if s is Scenario.DEPHASING_AVG:
        return _clock_rows(trials, seed, "dephasing_avg")
    if s is Scenario.MDI_GAIN:
        return _mdi_rows(trials, seed)
    frac, _ = simulate_estimator_coverage(epsilon=1e-3, repetitions=100, seed=seed)
    return [OracleRow("estimator_coverage", "coverage", "100 planted instances", 0.99, frac, 0.0, 100, threshold=True)]
