"""Monte Carlo engine: parking-lot days, fading trials and daily profiles.

Random streams are derived from a single seed with ``numpy.random.SeedSequence``.
Trials are split into fixed-size chunks and every chunk owns a child
stream, so the result of a run depends only on the seed and the trial
count, never on how many workers executed the chunks.
"""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .capacity import adjusted_capacity, mu_bar
from .channel import RadioConfig, db_to_linear, link_snr, sample_channel_gain
from .outage import link_outage, relay_leave_probability, snr_outage, system_outage
from .parking import DAY_HOURS, ParkingModel, Relay, leave_probability, sample_arrival

__all__ = [
    "SeedLike",
    "DayScenario",
    "LotState",
    "TrialEstimate",
    "EmptyLotError",
    "proportion_estimate",
    "mean_estimate",
    "child_seed",
    "generate_day",
    "estimate_outage",
    "HourlyValue",
    "outage_day_profile",
    "capacity_day_profile",
    "SensitivityRow",
    "SensitivityResult",
    "tdur_sensitivity",
    "tarr_sensitivity",
    "CHUNK_TRIALS",
]

SeedLike = Union[int, np.random.SeedSequence]

CHUNK_TRIALS = 1 << 16
Z95 = 1.959963984540054
# Wald is used while both counts are at least this large, Wilson otherwise.
WILSON_SWITCH = 10


class EmptyLotError(RuntimeError):
    """No parked car is available at the queried time."""


def _seq(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def child_seed(seed: SeedLike, *key: int) -> np.random.SeedSequence:
    """Deterministic sub-stream of ``seed`` addressed by ``key``."""
    s = _seq(seed)
    return np.random.SeedSequence(s.entropy, spawn_key=tuple(s.spawn_key) + tuple(int(k) for k in key))


@dataclass(frozen=True)
class DayScenario:
    lot_capacity: int = 500
    daily_cars: int = 2000
    current_time: float = 15.0
    replications: int = 1000
    seed: int = 20180101

    def __post_init__(self) -> None:
        if self.lot_capacity <= 0:
            raise ValueError("lot_capacity must be > 0")
        if self.daily_cars < 0:
            raise ValueError("daily_cars must be >= 0")
        if not 0.0 <= self.current_time < DAY_HOURS:
            raise ValueError("current_time must be in [0, 24)")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")


@dataclass(frozen=True)
class TrialEstimate:
    point: float
    half_width: float
    n: int

    @property
    def lower(self) -> float:
        return self.point - self.half_width

    @property
    def upper(self) -> float:
        return self.point + self.half_width


def proportion_estimate(successes: int, n: int) -> TrialEstimate:
    """Frequency with a 95% interval: Wald, or Wilson near 0 and 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = successes / n
    if min(successes, n - successes) >= WILSON_SWITCH:
        return TrialEstimate(p, Z95 * math.sqrt(p * (1.0 - p) / n), n)
    z2 = Z95 * Z95
    denom = 1.0 + z2 / n
    centre = (p + z2 / (2 * n)) / denom
    spread = Z95 * math.sqrt(p * (1.0 - p) / n + z2 / (4 * n * n)) / denom
    hw = max(centre + spread - p, p - (centre - spread))
    return TrialEstimate(p, hw, n)


def mean_estimate(values: Sequence[float]) -> TrialEstimate:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("no values")
    hw = Z95 * float(v.std(ddof=1)) / math.sqrt(v.size) if v.size > 1 else 0.0
    return TrialEstimate(float(v.mean()), hw, int(v.size))


# -- one day in the lot -------------------------------------------------------

@dataclass
class LotState:
    """Cars of one simulated day, sorted by arrival time.

    Hourly series are indexed by hour-of-day.  ``departures`` counts
    departures before midnight, which is what the occupancy balance uses;
    ``departures_wrapped`` files every admitted car under
    (arrival + duration) mod 24 instead.
    """

    arrival_times: np.ndarray
    durations: np.ndarray
    admitted: np.ndarray
    arrivals: np.ndarray = field(default_factory=lambda: np.zeros(24, int))
    rejected: np.ndarray = field(default_factory=lambda: np.zeros(24, int))
    departures: np.ndarray = field(default_factory=lambda: np.zeros(24, int))
    departures_wrapped: np.ndarray = field(default_factory=lambda: np.zeros(24, int))
    occupancy: np.ndarray = field(default_factory=lambda: np.zeros(24, int))
    overnight: int = 0

    @property
    def population(self) -> list[Relay]:
        """Admitted cars with their planned durations (elapsed time unset)."""
        idx = np.flatnonzero(self.admitted)
        return [
            Relay(int(self.arrival_times[i]), 0.0, float(self.durations[i]), float(self.arrival_times[i]))
            for i in idx
        ]

    def present_indices(self, t: float) -> np.ndarray:
        a, d = self.arrival_times, self.durations
        return np.flatnonzero(self.admitted & (a <= t) & (a + d > t))

    def relays_at(self, t: float, indices: Sequence[int] | None = None) -> list[Relay]:
        if indices is None:
            indices = self.present_indices(t)
        return [
            Relay(
                int(self.arrival_times[i]),
                float(t - self.arrival_times[i]),
                float(self.durations[i]),
                float(self.arrival_times[i]),
            )
            for i in indices
        ]


def _sample_durations(model: ParkingModel, hours: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = hours.size
    u = rng.random(n)
    out = np.empty(n)
    for h in range(24):
        mask = hours == h
        m = int(mask.sum())
        if m == 0:
            continue
        p = model.params(h)
        short = u[mask] < p.d1
        xs = rng.gamma(p.kappa_s, p.theta_s, m)
        xl = rng.gamma(p.kappa_l, p.theta_l, m)
        out[mask] = np.where(short, xs, xl)
    return out


def generate_day(model: ParkingModel, scenario: DayScenario, rng: np.random.Generator) -> LotState:
    """Simulate the arrivals of one day with admission control at capacity."""
    n = scenario.daily_cars
    arrivals = np.sort(np.asarray(sample_arrival(model.arrival, rng, n), dtype=float).reshape(-1))
    hours = np.minimum(arrivals.astype(int), 23)
    durations = _sample_durations(model, hours, rng)
    admitted = np.zeros(n, dtype=bool)

    parked: list[float] = []  # min-heap of departure times
    for i in range(n):
        t = arrivals[i]
        while parked and parked[0] <= t:
            heapq.heappop(parked)
        if len(parked) < scenario.lot_capacity:
            admitted[i] = True
            heapq.heappush(parked, t + durations[i])

    state = LotState(arrivals, durations, admitted)
    np.add.at(state.arrivals, hours[admitted], 1)
    np.add.at(state.rejected, hours[~admitted], 1)
    ends = arrivals[admitted] + durations[admitted]
    same_day = ends < DAY_HOURS
    np.add.at(state.departures, ends[same_day].astype(int), 1)
    np.add.at(state.departures_wrapped, np.floor(ends).astype(int) % 24, 1)
    state.overnight = int((~same_day).sum())
    state.occupancy = np.cumsum(state.arrivals) - np.cumsum(state.departures)
    return state


# -- fading trials ------------------------------------------------------------

def _outage_chunk(args) -> int:
    seq, n, p_leave, cfg, departures = args
    rng = np.random.default_rng(seq)
    k = p_leave.size
    snr = link_snr(sample_channel_gain(rng, (n, k)), sample_channel_gain(rng, (n, k)), cfg)
    fail = snr < cfg.gamma_th
    if departures:
        fail |= rng.random((n, k)) < p_leave
    return int(np.count_nonzero(fail.all(axis=1)))


def estimate_outage(
    relays: Sequence[Relay],
    model: ParkingModel,
    cfg: RadioConfig,
    trials: int,
    seed: SeedLike,
    *,
    departures: bool = True,
    workers: int = 1,
    p_leave: Sequence[float] | None = None,
) -> TrialEstimate:
    """Empirical system outage over ``trials`` independent trials.

    Each trial draws both hops' fading for every relay and a departure
    Bernoulli with the relay's leave probability; the trial is an outage
    when every branch is below threshold or gone.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if p_leave is None:
        if not relays:
            raise ValueError("need at least one relay")
        p_leave = [relay_leave_probability(r, model, cfg.tau) for r in relays]
    pl = np.asarray(p_leave, dtype=float)
    seq = _seq(seed)
    n_chunks = -(-trials // CHUNK_TRIALS)
    jobs = []
    for c in range(n_chunks):
        size = min(CHUNK_TRIALS, trials - c * CHUNK_TRIALS)
        jobs.append((child_seed(seq, c), size, pl, cfg, departures))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            count = sum(pool.map(_outage_chunk, jobs))
    else:
        count = sum(map(_outage_chunk, jobs))
    return proportion_estimate(count, trials)


# -- daily profiles -----------------------------------------------------------

@dataclass(frozen=True)
class HourlyValue:
    hour: int
    estimate: TrialEstimate | None
    skipped: int = 0

    @property
    def mean(self) -> float:
        return math.nan if self.estimate is None else self.estimate.point


def _present_relays(state: LotState, t: float, k: int, rng: np.random.Generator) -> list[Relay] | None:
    idx = state.present_indices(t)
    if idx.size < k:
        return None
    pick = np.sort(rng.choice(idx, size=k, replace=False))
    return state.relays_at(t, pick)


def _empirical_outage(relays: Sequence[Relay], t: float, cfg: RadioConfig, rng: np.random.Generator) -> int:
    # One trial with the simulated ground truth: a relay is gone if its
    # planned stay ends inside (t, t + tau].
    k = len(relays)
    snr = link_snr(sample_channel_gain(rng, k), sample_channel_gain(rng, k), cfg)
    ends = np.array([r.arrival_time + r.planned_duration for r in relays])
    fail = (np.asarray(snr) < cfg.gamma_th) | (ends <= t + cfg.tau)
    return int(fail.all())


def outage_day_profile(
    model: ParkingModel,
    cfg: RadioConfig,
    scenario: DayScenario,
    k: int,
    seed: SeedLike | None = None,
    *,
    hours: Sequence[int] = range(24),
    method: str = "analytical",
    snr_model: str = "approx",
) -> list[HourlyValue]:
    """System outage at each hour mark, averaged over simulated days.

    ``method="analytical"`` samples the relays from the lot and evaluates
    the closed-form outage for them; ``"empirical"`` runs one fading and
    departure trial per day using each car's simulated planned stay.
    Hours where the lot holds fewer than ``k`` cars are skipped for that
    day and counted in ``skipped``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if method not in ("analytical", "empirical"):
        raise ValueError(f"unknown method {method!r}")
    seq = _seq(scenario.seed if seed is None else seed)
    p_gamma = snr_outage(cfg, model=snr_model)
    hours = list(hours)
    values: dict[int, list[float]] = {h: [] for h in hours}
    skipped = {h: 0 for h in hours}
    for r in range(scenario.replications):
        rng = np.random.default_rng(child_seed(seq, r))
        state = generate_day(model, scenario, rng)
        for h in hours:
            relays = _present_relays(state, float(h), k, rng)
            if relays is None:
                skipped[h] += 1
                continue
            if method == "analytical":
                links = [link_outage(p_gamma, relay_leave_probability(x, model, cfg.tau)) for x in relays]
                values[h].append(system_outage(links))
            else:
                values[h].append(_empirical_outage(relays, float(h), cfg, rng))
    out = []
    for h in hours:
        v = values[h]
        if not v:
            est = None
        elif method == "empirical":
            est = proportion_estimate(int(sum(v)), len(v))
        else:
            est = mean_estimate(v)
        out.append(HourlyValue(h, est, skipped[h]))
    return out


def capacity_day_profile(
    model: ParkingModel,
    cfg: RadioConfig,
    scenario: DayScenario,
    seed: SeedLike | None = None,
    *,
    hours: Sequence[int] = range(7, 23),
) -> list[HourlyValue]:
    """Departure-adjusted capacity of one randomly chosen relay per hour."""
    seq = _seq(scenario.seed if seed is None else seed)
    m = mu_bar(cfg)
    hours = list(hours)
    values: dict[int, list[float]] = {h: [] for h in hours}
    for r in range(scenario.replications):
        rng = np.random.default_rng(child_seed(seq, r))
        state = generate_day(model, scenario, rng)
        for h in hours:
            relays = _present_relays(state, float(h), 1, rng)
            if relays is None:
                raise EmptyLotError(f"no parked car at {h}:00 in replication {r}")
            p_stay = 1.0 - relay_leave_probability(relays[0], model, cfg.tau)
            values[h].append(adjusted_capacity(cfg, m, [p_stay]))
    return [HourlyValue(h, mean_estimate(values[h])) for h in hours]


# -- single-relay sensitivity sweeps ------------------------------------------

@dataclass(frozen=True)
class SensitivityRow:
    t_arr: int
    t_dur_hours: float
    p_leave: float
    p_out: float


@dataclass(frozen=True)
class SensitivityResult:
    rows: tuple[SensitivityRow, ...]

    @property
    def spread(self) -> float:
        v = [r.p_out for r in self.rows]
        return max(v) - min(v)

    @property
    def relative_spread(self) -> float:
        v = [r.p_out for r in self.rows]
        return self.spread / (sum(v) / len(v))


def _single_relay_row(model: ParkingModel, cfg: RadioConfig, p_gamma: float, t_arr: int, t_dur: float):
    pl = leave_probability(model.params(t_arr), t_dur, cfg.tau)
    return SensitivityRow(int(t_arr), float(t_dur), pl, link_outage(p_gamma, pl))


def tdur_sensitivity(
    model: ParkingModel,
    cfg: RadioConfig,
    t_arr: int,
    tdur_grid_minutes: Sequence[float],
    snr_model: str = "approx",
) -> SensitivityResult:
    """Single-relay outage versus time already parked, at a fixed arrival hour."""
    p_gamma = snr_outage(cfg, model=snr_model)
    return SensitivityResult(
        tuple(_single_relay_row(model, cfg, p_gamma, t_arr, m / 60.0) for m in tdur_grid_minutes)
    )


def tarr_sensitivity(
    model: ParkingModel,
    cfg: RadioConfig,
    t_dur: float,
    tarr_grid: Sequence[int] = range(24),
    snr_model: str = "approx",
) -> SensitivityResult:
    """Single-relay outage versus arrival hour, at a fixed parked time (hours)."""
    p_gamma = snr_outage(cfg, model=snr_model)
    return SensitivityResult(tuple(_single_relay_row(model, cfg, p_gamma, h, t_dur) for h in tarr_grid))


def threshold_config(cfg: RadioConfig, threshold_db: float) -> RadioConfig:
    return cfg.with_threshold(db_to_linear(threshold_db))
