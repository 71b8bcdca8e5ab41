"""Slot-by-slot simulation of N devices sharing a collision channel.

Ages start at 1.  In each slot a device with age ``a`` transmits when its
uniform draw falls below ``policy(a)``; a slot with exactly one transmitter
delivers that device's update and its age drops to 1, every other age grows
by one.  Statistics are taken on start-of-slot ages after a warmup.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from ._kernel import empty_accumulators, run_slots

__all__ = [
    "CapPolicy",
    "DeviceState",
    "Idle",
    "Success",
    "Collision",
    "SimConfig",
    "SimReport",
    "step",
    "run",
    "empirical_success_probability",
    "replication_rng",
]

CHUNK_DRAWS = 1 << 21


@dataclass(frozen=True)
class CapPolicy:
    """Age-indexed channel access probability.

    ``table[k]`` applies at age ``k + 1`` and the last entry repeats for all
    larger ages.  Build instances with :meth:`adra`, :meth:`aira` or
    :meth:`general`.
    """

    kind: str
    table: tuple
    threshold: int = 1
    cap: float = float("nan")

    def __post_init__(self):
        if not self.table:
            raise ValueError("policy table must be nonempty")
        if any(not (0.0 <= x <= 1.0) for x in self.table):
            raise ValueError("access probabilities must lie in [0, 1]")

    @classmethod
    def adra(cls, threshold: int, cap: float) -> "CapPolicy":
        if int(threshold) != threshold or threshold < 1:
            raise ValueError("threshold must be an integer >= 1")
        table = (0.0,) * (int(threshold) - 1) + (float(cap),)
        return cls("adra", table, int(threshold), float(cap))

    @classmethod
    def aira(cls, cap: float) -> "CapPolicy":
        return cls("aira", (float(cap),), 1, float(cap))

    @classmethod
    def general(cls, table: Sequence[float]) -> "CapPolicy":
        return cls("general", tuple(float(x) for x in table))

    def __call__(self, age: int) -> float:
        if age < 1:
            raise ValueError("age must be >= 1")
        return self.table[min(age, len(self.table)) - 1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.table, dtype=np.float64)


@dataclass(frozen=True)
class DeviceState:
    aoi: int = 1

    def __post_init__(self):
        if self.aoi < 1:
            raise ValueError("aoi must be >= 1")


@dataclass(frozen=True)
class Idle:
    pass


@dataclass(frozen=True)
class Success:
    device: int


@dataclass(frozen=True)
class Collision:
    transmitters: int


SlotOutcome = Union[Idle, Success, Collision]


def step(states: Sequence[DeviceState], policy: CapPolicy, draws: Sequence[float]):
    """Advance one slot.  Returns ``(new_states, outcome)``."""
    if len(draws) != len(states):
        raise ValueError("need exactly one uniform draw per device")
    tx = [i for i, (s, u) in enumerate(zip(states, draws)) if u < policy(s.aoi)]
    new = [DeviceState(s.aoi + 1) for s in states]
    if len(tx) == 1:
        new[tx[0]] = DeviceState(1)
        return new, Success(tx[0])
    if not tx:
        return new, Idle()
    return new, Collision(len(tx))


@dataclass(frozen=True)
class SimConfig:
    horizon: int = 1_000_000
    warmup: int = 10_000
    seed: int = 0
    replications: int = 1
    pmf_cap: int = 1000
    threads: int = 1

    def __post_init__(self):
        if self.warmup < 0 or self.horizon <= self.warmup:
            raise ValueError("need horizon > warmup >= 0")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.pmf_cap < 1:
            raise ValueError("pmf_cap must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def measured_slots(self) -> int:
        return self.horizon - self.warmup


def default_pmf_cap(policy: CapPolicy) -> int:
    """Histogram cap: max(100 * threshold, 1000)."""
    return max(100 * policy.threshold, 1000)


@dataclass
class SimReport:
    n_devices: int
    measured_slots: int
    replications: int
    per_device_avg_aoi: list
    per_device_stderr: list
    network_avg_aoi: float
    avg_aoi_stderr: float
    empirical_pmf: np.ndarray = field(repr=False)
    overflow_mass: float
    success_rate: float
    collision_rate: float
    idle_rate: float
    attempts: int
    successes: int
    conditional_success_rate: float
    conditional_success_stderr: float
    replication_avg_aoi: list = field(repr=False, default_factory=list)

    @property
    def pmf_cap(self) -> int:
        return len(self.empirical_pmf) - 1

    def pmf(self, age: int) -> float:
        """Empirical frequency of ``age`` (1 <= age <= pmf_cap)."""
        return float(self.empirical_pmf[age])


def replication_rng(seed: int, replication: int) -> np.random.Generator:
    """PCG64 stream for one replication, keyed by SeedSequence(seed, spawn_key=(r,))."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replication),))
    return np.random.Generator(np.random.PCG64(ss))


def _one_replication(n, table, sim, r):
    rng = replication_rng(sim.seed, r)
    ages = np.ones(n, dtype=np.int64)
    age_sums, hist, counts = empty_accumulators(n, sim.pmf_cap)
    chunk = max(1, CHUNK_DRAWS // n)
    for start, stop, measure in ((0, sim.warmup, False), (sim.warmup, sim.horizon, True)):
        t = start
        while t < stop:
            m = min(chunk, stop - t)
            draws = rng.random((m, n))
            run_slots(ages, table, draws, measure, age_sums, hist, counts)
            t += m
    return age_sums, hist, counts


def _stderr(x):
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 2:
        return np.full(x.shape[1:], np.nan) if x.ndim > 1 else float("nan")
    return x.std(axis=0, ddof=1) / math.sqrt(x.shape[0])


def run(n_devices: int, policy: CapPolicy, sim: SimConfig) -> SimReport:
    """Simulate ``sim.replications`` independent runs and pool the results.

    Replication ``r`` draws from :func:`replication_rng`; device ``i`` uses
    column ``i`` of each slot's draw row, so results do not depend on the
    thread count.
    """
    if n_devices < 1:
        raise ValueError("n_devices must be >= 1")
    table = policy.as_array()
    reps = range(sim.replications)
    if sim.threads > 1 and sim.replications > 1:
        with ThreadPoolExecutor(max_workers=sim.threads) as pool:
            results = list(pool.map(lambda r: _one_replication(n_devices, table, sim, r), reps))
    else:
        results = [_one_replication(n_devices, table, sim, r) for r in reps]

    m = sim.measured_slots
    per_rep_dev = np.array([a / m for a, _, _ in results])
    per_rep_net = per_rep_dev.mean(axis=1)
    hist = np.sum([h for _, h, _ in results], axis=0)
    counts = np.sum([c for _, _, c in results], axis=0)
    rep_q = [c[1] / c[3] if c[3] else np.nan for _, _, c in results]

    total_slots = m * sim.replications
    pmf = hist / hist.sum()
    idle, succ, coll, attempts = (int(x) for x in counts)
    return SimReport(
        n_devices=n_devices,
        measured_slots=m,
        replications=sim.replications,
        per_device_avg_aoi=per_rep_dev.mean(axis=0).tolist(),
        per_device_stderr=np.atleast_1d(_stderr(per_rep_dev)).tolist(),
        network_avg_aoi=float(per_rep_net.mean()),
        avg_aoi_stderr=float(_stderr(per_rep_net)),
        empirical_pmf=pmf[:-1].copy(),
        overflow_mass=float(pmf[-1]),
        success_rate=succ / total_slots,
        collision_rate=coll / total_slots,
        idle_rate=idle / total_slots,
        attempts=attempts,
        successes=succ,
        conditional_success_rate=succ / attempts if attempts else float("nan"),
        conditional_success_stderr=float(_stderr(rep_q)),
        replication_avg_aoi=per_rep_net.tolist(),
    )


def empirical_success_probability(report: SimReport) -> float:
    """Fraction of transmission attempts that were delivered."""
    if report.attempts == 0:
        raise ZeroDivisionError("no transmission attempts were made")
    return report.successes / report.attempts
