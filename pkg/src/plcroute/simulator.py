"""Seeded slot-accurate Monte-Carlo simulation of both polling protocols.

Every (cycle, slave, try) triple derives its own random stream from the
master seed, so reports are bit-identical no matter how many worker
threads execute the cycles.  Slot accounting is exact: a DLC1000 try
reserves 2*(level+1) slots whether or not it succeeds, an SFN try
reserves the two full flood windows, 2 + r_dl + r_ul slots, with both
levels incremented by one per retry.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import dlc, sfn
from .channel import MASTER, PerMatrix

PROTOCOLS = ("dlc1000", "sfn")

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class SimConfig:
    protocol: str
    cycles: int
    max_retries: int = 2
    max_level: int = 4  # DLC1000 repeater-address cap; SFN plans its own levels
    slot_time: float = 1.0
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_level < 0:
            raise ValueError("max_level must be >= 0")
        if self.slot_time <= 0:
            raise ValueError("slot_time must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class SlaveStats:
    slave: int
    attempts: int
    successes: int
    mean_round_trip_slots: float | None  # slots per successful poll
    give_ups: int
    slots: int


@dataclass(frozen=True)
class SimReport:
    protocol: str
    cycles: int
    per_slave: tuple[SlaveStats, ...]
    mean_cycle_duration: float
    reached_count: int
    total_slots: int
    seed_echo: int

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "cycles": self.cycles,
            "per_slave": [
                {
                    "slave": s.slave,
                    "attempts": s.attempts,
                    "successes": s.successes,
                    "mean_round_trip_slots": s.mean_round_trip_slots,
                    "give_ups": s.give_ups,
                    "slots": s.slots,
                }
                for s in self.per_slave
            ],
            "mean_cycle_duration": self.mean_cycle_duration,
            "reached_count": self.reached_count,
            "total_slots": self.total_slots,
            "seed_echo": self.seed_echo,
        }


def format_report(report: SimReport) -> str:
    """Fixed-width text table of a simulation report."""
    header = (f"{'slave':>5}  {'attempts':>8}  {'successes':>9}  "
              f"{'mean_slots':>10}  {'give_ups':>8}")
    lines = [
        f"protocol {report.protocol}, {report.cycles} cycles, "
        f"seed {report.seed_echo}",
        header,
        "-" * len(header),
    ]
    for s in report.per_slave:
        mean = "-" if s.mean_round_trip_slots is None \
            else f"{s.mean_round_trip_slots:.3f}"
        lines.append(f"{s.slave:>5}  {s.attempts:>8}  {s.successes:>9}  "
                     f"{mean:>10}  {s.give_ups:>8}")
    lines.append(f"mean cycle duration {report.mean_cycle_duration:.4f} "
                 f"({report.reached_count} slaves reached), "
                 f"{report.total_slots} slots total")
    return "\n".join(lines)


def _try_rng(seed: int, cycle: int, slave: int, attempt: int) -> np.random.Generator:
    return np.random.default_rng((seed & _SEED_MASK, cycle, slave, attempt))


def flood_trial(per: PerMatrix, origin: int, max_level: int,
                rng: np.random.Generator, no_relay=()) -> np.ndarray:
    """One simulated flood; returns each node's first-reception level (-1 if none).

    The origin transmits in slot 0; a node that first receives at level r
    retransmits exactly once at level r + 1 while the level budget lasts.
    Nodes in no_relay (the packet's destination) receive but never
    retransmit.
    """
    return _flood_trial(1.0 - per.per, origin, max_level, rng,
                        frozenset(no_relay))


def _flood_trial(ok: np.ndarray, origin: int, max_level: int,
                 rng: np.random.Generator, no_relay) -> np.ndarray:
    n = ok.shape[0]
    level = np.full(n, -1, dtype=np.int64)
    transmitters = np.array([origin])
    for r in range(max_level + 1):
        draws = rng.random((transmitters.size, n))
        reached = (draws < ok[transmitters, :]).any(axis=0)
        fresh = reached & (level < 0)
        fresh[origin] = False
        level[fresh] = r
        if r == max_level:
            break
        nxt = np.flatnonzero(fresh)
        if no_relay:
            nxt = nxt[[v not in no_relay for v in nxt]]
        if nxt.size == 0:
            break
        transmitters = nxt
    return level


def _reduce_report(cfg: SimConfig, node_count: int, slots: np.ndarray,
                   tries: np.ndarray, successes: np.ndarray) -> SimReport:
    per_slave = []
    for k, s in enumerate(range(1, node_count)):
        succ = int(successes[k])
        per_slave.append(SlaveStats(
            slave=s,
            attempts=int(tries[k]),
            successes=succ,
            mean_round_trip_slots=float(slots[k]) / succ if succ else None,
            give_ups=cfg.cycles - succ,
            slots=int(slots[k]),
        ))
    reached = successes > 0
    mean_cycle = cfg.slot_time * float(slots[reached].sum()) / cfg.cycles
    return SimReport(
        protocol=cfg.protocol,
        cycles=cfg.cycles,
        per_slave=tuple(per_slave),
        mean_cycle_duration=mean_cycle,
        reached_count=int(reached.sum()),
        total_slots=int(slots.sum()),
        seed_echo=cfg.seed,
    )


def _run_cycles(cfg: SimConfig, node_count: int, run_one):
    """Execute run_one(cycle) for every cycle, optionally across threads.

    Per-slave counters are summed, which is order-independent, so serial
    and threaded execution produce identical reports.
    """
    slots = np.zeros(node_count - 1, dtype=np.int64)
    tries = np.zeros(node_count - 1, dtype=np.int64)
    successes = np.zeros(node_count - 1, dtype=np.int64)
    if cfg.workers == 1:
        results = map(run_one, range(cfg.cycles))
    else:
        pool = ThreadPoolExecutor(max_workers=cfg.workers)
        try:
            results = list(pool.map(run_one, range(cfg.cycles), chunksize=64))
        finally:
            pool.shutdown()
    for c_slots, c_tries, c_succ in results:
        slots += c_slots
        tries += c_tries
        successes += c_succ
    return slots, tries, successes


def simulate_dlc(per: PerMatrix, cfg: SimConfig) -> SimReport:
    """Monte-Carlo polling under dynamic source routing.

    The master polls each slave over the analytically best chain for that
    slave and retries on the same chain; every directed link of the round
    trip is an independent Bernoulli draw.  Unreachable slaves are still
    polled (at level 0) and consume slots.
    """
    if cfg.protocol != "dlc1000":
        raise ValueError("config protocol must be 'dlc1000'")
    n = per.node_count
    p = per.per

    plans = []
    for s in per.slaves:
        analysis = dlc.slave_analysis(per, s, cfg.max_level, cfg.slot_time)
        path = dlc.best_path(per, s, analysis.best_level)
        hops = [MASTER, *path.repeaters, s]
        links = list(zip(hops, hops[1:])) + list(zip(hops[::-1], hops[::-1][1:]))
        link_ok = np.array([1.0 - p[a, b] for a, b in links])
        plans.append((s, analysis.best_level, link_ok))

    def run_one(cycle: int):
        c_slots = np.zeros(n - 1, dtype=np.int64)
        c_tries = np.zeros(n - 1, dtype=np.int64)
        c_succ = np.zeros(n - 1, dtype=np.int64)
        for k, (s, level, link_ok) in enumerate(plans):
            cost = 2 * (level + 1)
            for attempt in range(cfg.max_retries + 1):
                rng = _try_rng(cfg.seed, cycle, s, attempt)
                c_tries[k] += 1
                c_slots[k] += cost
                if np.all(rng.random(link_ok.size) < link_ok):
                    c_succ[k] = 1
                    break
        return c_slots, c_tries, c_succ

    return _reduce_report(cfg, n, *_run_cycles(cfg, n, run_one))


def simulate_sfn(per: PerMatrix, cfg: SimConfig) -> SimReport:
    """Monte-Carlo polling under flooding routing.

    Try j for a slave uses allowed levels (r_dl + j, r_ul + j), the first
    transmission levels coming from the analytic per-slave plan.  The
    destination only answers after the full downlink window to avoid
    collisions, so a try always occupies (1 + r_dl + j) + (1 + r_ul + j)
    slots.  Slaves the analysis finds unreachable are polled with levels
    (0, 0) and consume slots the same way.
    """
    if cfg.protocol != "sfn":
        raise ValueError("config protocol must be 'sfn'")
    n = per.node_count
    ok = 1.0 - per.per

    plan_levels = []
    for analysis in sfn.cycle_analysis(per, cfg.slot_time).slaves:
        plan_levels.append((analysis.slave, analysis.r_dl, analysis.r_ul))

    def run_one(cycle: int):
        c_slots = np.zeros(n - 1, dtype=np.int64)
        c_tries = np.zeros(n - 1, dtype=np.int64)
        c_succ = np.zeros(n - 1, dtype=np.int64)
        for k, (s, r_dl, r_ul) in enumerate(plan_levels):
            for attempt in range(cfg.max_retries + 1):
                rd = r_dl + attempt
                ru = r_ul + attempt
                rng = _try_rng(cfg.seed, cycle, s, attempt)
                c_tries[k] += 1
                c_slots[k] += 2 + rd + ru
                down = _flood_trial(ok, MASTER, rd, rng, frozenset((s,)))
                if down[s] < 0:
                    continue
                up = _flood_trial(ok, s, ru, rng, frozenset((MASTER,)))
                if up[MASTER] >= 0:
                    c_succ[k] = 1
                    break
        return c_slots, c_tries, c_succ

    return _reduce_report(cfg, n, *_run_cycles(cfg, n, run_one))


def simulate(per: PerMatrix, cfg: SimConfig) -> SimReport:
    if cfg.protocol == "dlc1000":
        return simulate_dlc(per, cfg)
    return simulate_sfn(per, cfg)


def sample_first_success_levels(per: PerMatrix, target: int, trials: int,
                                seed: int = 0,
                                level_cap: int | None = None) -> np.ndarray:
    """Empirical first-success levels of the escalating downlink chain.

    Each trial floods from the master with allowed level 0, 1, 2, ... until
    the target receives, with independent draws per attempt; this is the
    simulated counterpart of the analytic first-success level
    distribution.  Returns one level per trial (-1 if the cap is hit).
    """
    if level_cap is None:
        level_cap = per.node_count
    ok = 1.0 - per.per
    levels = np.full(trials, -1, dtype=np.int64)
    destination = frozenset((target,))
    for t in range(trials):
        for r in range(level_cap + 1):
            rng = np.random.default_rng((seed & _SEED_MASK, t, r))
            got = _flood_trial(ok, MASTER, r, rng, destination)
            if got[target] >= 0:
                levels[t] = r
                break
    return levels
