"""Expected polling-cycle duration under SFN flooding routing.

A request floods level by level: every node that first receives the
packet retransmits it exactly once in the next slot, and simultaneous
transmissions are treated as independent chances at each receiver.  The
downlink and uplink each get an allowed repeater level chosen around the
mean first-success level; a poll try occupies the two full windows
(2 + r_dl + r_ul slots) and is retried with both levels incremented by
one until it succeeds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import MASTER, PerMatrix

# Residual probability mass beyond the computed horizon above which a
# mean first-success level is flagged as unreliable.
TRUNCATION_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class FloodProfile:
    """Per-level transmit and first-reception probabilities of one flood.

    Arrays are indexed [node, level] with levels 0..horizon; level r
    receptions happen in slot r + 1 of the window.  cumulative[s, r] is the
    probability that node s has received the packet within level r.
    """

    origin: int
    initial_tx: float
    tx: np.ndarray
    rcv: np.ndarray
    cumulative: np.ndarray
    horizon: int


@dataclass(frozen=True, eq=False)
class LevelDistribution:
    """First-success repeater level of the escalating retry chain."""

    pi: np.ndarray
    mean_level: float | None  # None when no level can succeed
    truncated_mass: float
    unreachable: bool

    @property
    def truncation_flagged(self) -> bool:
        return self.truncated_mass >= TRUNCATION_TOLERANCE


@dataclass(frozen=True)
class SfnCandidate:
    r_dl: int
    r_ul: int
    poll_success: float
    expected_duration: float


@dataclass(frozen=True)
class SfnSlaveAnalysis:
    slave: int
    r_dl: int
    r_ul: int
    poll_success: float
    expected_duration: float | None
    candidates: tuple[SfnCandidate, ...]

    @property
    def reachable(self) -> bool:
        return self.expected_duration is not None


@dataclass(frozen=True)
class SfnCycleAnalysis:
    slaves: tuple[SfnSlaveAnalysis, ...]
    total: float  # sum over reachable slaves only
    unreachable: tuple[int, ...]

    @property
    def complete(self) -> bool:
        return not self.unreachable


def flood(per: PerMatrix, origin: int, initial_tx: float = 1.0,
          horizon: int | None = None) -> FloodProfile:
    """Level-by-level transmit/reception recursion for one flood origin.

    initial_tx scales the whole profile; an uplink flood is seeded with the
    probability mass that the downlink delivered to its origin.  At level
    r >= 1 a node transmits with the first-reception probability of the
    previous level times its still-unspent transmit mass, and a node first
    receives if it has not received before and at least one current
    transmitter gets through to it.  The origin never first-receives its
    own packet.  Computation stops early once no node has any probability
    left to transmit.
    """
    if not (0 <= origin < per.node_count):
        raise ValueError(f"origin {origin} out of range")
    if not (0.0 < initial_tx <= 1.0):
        raise ValueError("initial_tx must be in (0, 1]")
    if horizon is None:
        horizon = per.node_count
    if horizon < 0:
        raise ValueError("horizon must be >= 0")

    n = per.node_count
    ok = 1.0 - per.per

    tx0 = np.zeros(n)
    tx0[origin] = initial_tx
    tx_cols = [tx0]
    rcv_cols = []
    cum_rcv = np.zeros(n)
    spent_tx = np.zeros(n)  # transmit mass through level r-1 when building level r+1
    tx = tx0

    for r in range(horizon + 1):
        miss = 1.0 - tx[:, None] * ok
        np.fill_diagonal(miss, 1.0)  # a node is not its own transmitter
        col = (1.0 - cum_rcv) * (1.0 - miss.prod(axis=0))
        col[origin] = 0.0
        np.maximum(col, 0.0, out=col)
        rcv_cols.append(col)
        cum_rcv = cum_rcv + col
        if r == horizon:
            break
        if r >= 1:
            spent_tx = spent_tx + tx_cols[r - 1]
        tx = np.maximum(1.0 - spent_tx, 0.0) * col
        if not tx.any():
            break
        tx_cols.append(tx)

    levels = len(rcv_cols)
    tx_mat = np.zeros((n, levels))
    for r, colt in enumerate(tx_cols):
        tx_mat[:, r] = colt
    rcv_mat = np.column_stack(rcv_cols)
    for m in (tx_mat, rcv_mat):
        m.setflags(write=False)
    cumulative = np.cumsum(rcv_mat, axis=1)
    cumulative.setflags(write=False)
    return FloodProfile(origin, initial_tx, tx_mat, rcv_mat, cumulative,
                        levels - 1)


def first_success_distribution(attempt_success) -> tuple[np.ndarray, float]:
    """Distribution of the level at which an escalating chain first succeeds.

    attempt_success[r] is the success probability of the attempt made at
    level r; attempts are independent and the level increments by one per
    failure.  Returns the per-level probabilities and the residual mass of
    never succeeding within the given levels.
    """
    q = np.asarray(attempt_success, dtype=float)
    pi = np.empty_like(q)
    still_failing = 1.0
    for r, qr in enumerate(q):
        pi[r] = qr * still_failing
        still_failing *= 1.0 - qr
    return pi, float(still_failing)


def level_distribution(profile: FloodProfile, target: int) -> LevelDistribution:
    """First-success level statistics of retrying a flood toward a target.

    An attempt at level r succeeds with the cumulative reception
    probability at that level.  The mean is taken over the normalized
    distribution; residual mass beyond the horizon is reported and flagged
    when it is large enough to bias the mean.
    """
    if target == profile.origin:
        raise ValueError("target must differ from the flood origin")
    if not (0 <= target < profile.cumulative.shape[0]):
        raise ValueError(f"target {target} out of range")
    pi, truncated = first_success_distribution(profile.cumulative[target])
    mass = pi.sum()
    if mass <= 0.0:
        return LevelDistribution(pi, None, 1.0, True)
    mean = float(np.arange(pi.size) @ pi / mass)
    return LevelDistribution(pi, mean, truncated, False)


def _level_candidates(mean: float) -> list[int]:
    lo, hi = math.floor(mean), math.ceil(mean)
    return [lo] if lo == hi else [lo, hi]


def slave_analysis(per: PerMatrix, slave: int, slot_time: float = 1.0,
                   horizon: int | None = None,
                   downlink: FloodProfile | None = None) -> SfnSlaveAnalysis:
    """Allowed level pair and expected polling duration for one slave.

    Downlink candidates are the floor/ceil of the mean downlink
    first-success level.  For each, an uplink flood seeded with the
    downlink success mass yields uplink candidates the same way.  Poll
    success multiplies the downlink reception probability by the uplink
    reception probability conditioned on the downlink having succeeded,
    and a try costs the two full windows, 2 + r_dl + r_ul slots.  The
    reported pair minimizes expected duration over the evaluated grid
    (ties toward the smaller pair).
    """
    if not (1 <= slave < per.node_count):
        raise ValueError(f"slave index {slave} out of range (master is 0)")
    if slot_time <= 0:
        raise ValueError("slot_time must be positive")
    if downlink is None:
        downlink = flood(per, MASTER, 1.0, horizon)
    dl_dist = level_distribution(downlink, slave)
    if dl_dist.unreachable:
        return SfnSlaveAnalysis(slave, 0, 0, 0.0, None, ())

    candidates = []
    best: SfnCandidate | None = None
    for r_dl in _level_candidates(dl_dist.mean_level):
        dl_success = float(downlink.cumulative[slave, r_dl])
        uplink = flood(per, slave, dl_success, horizon)
        ul_dist = level_distribution(uplink, MASTER)
        if ul_dist.unreachable:
            continue
        for r_ul in _level_candidates(ul_dist.mean_level):
            # The level recursion can accumulate more reception mass at the
            # master than the uplink injected (simultaneous relays are
            # treated as independent chances), so the conditional factor is
            # capped at 1 to stay a probability.
            ul_conditional = min(
                1.0, float(uplink.cumulative[MASTER, r_ul]) / dl_success)
            poll_success = dl_success * ul_conditional
            if poll_success <= 0.0:
                continue
            duration = (2.0 + r_dl + r_ul) * slot_time / poll_success
            cand = SfnCandidate(r_dl, r_ul, poll_success, duration)
            candidates.append(cand)
            if best is None or (cand.expected_duration, cand.r_dl, cand.r_ul) < \
                    (best.expected_duration, best.r_dl, best.r_ul):
                best = cand
    if best is None:
        return SfnSlaveAnalysis(slave, 0, 0, 0.0, None, tuple(candidates))
    return SfnSlaveAnalysis(slave, best.r_dl, best.r_ul, best.poll_success,
                            best.expected_duration, tuple(candidates))


def cycle_analysis(per: PerMatrix, slot_time: float = 1.0,
                   horizon: int | None = None) -> SfnCycleAnalysis:
    """Expected duration of one full polling cycle (sum over all slaves).

    The downlink flood is computed once and shared across slaves.
    """
    downlink = flood(per, MASTER, 1.0, horizon)
    slaves = tuple(slave_analysis(per, s, slot_time, horizon, downlink)
                   for s in per.slaves)
    unreachable = tuple(a.slave for a in slaves if not a.reachable)
    total = sum(a.expected_duration for a in slaves if a.reachable)
    return SfnCycleAnalysis(slaves, float(total), unreachable)
