"""Event-driven simulation of the rank-selection branching system.

N particles diffuse as independent Brownian motions; at the arrivals of
a Poisson clock with intensity N*r(t) a uniformly chosen rank branches
and a psi-distributed rank is removed.  Between events the dynamics are
sampled exactly (Gaussian increments), never Euler-discretized, so the
only approximation anywhere is Monte Carlo error.

Also provides the always-kill-leftmost mode, rank-coupled paired runs
for pathwise dominance checks, and the coloured branching run in which
the N-particle system rides inside a freely growing population.
"""

import csv
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import (
    AssumptionViolation,
    PopulationCap,
    RankOutOfRange,
    ValidationError,
)
from .selection import LeftmostKill, SelectionPsi, rank_kill_probs

POPULATION_CAP = 10**6

_RATE_SLACK = 1e-9  # tolerated excess of an observed r(t) over the stated bound


def _rng_from(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _positions_digest(positions):
    return hashlib.blake2b(positions.tobytes(), digest_size=16).hexdigest()


def _kill_cum(psi, n):
    """Cumulative kill law over ranks, with the flat tail pinned to 1.0.

    Zero-mass ranks leave the cumulative exactly constant, so after
    normalization a right-side binary search can never land on them.
    """
    cum = np.cumsum(rank_kill_probs(psi, n))
    return cum / cum[-1]


@dataclass
class ParticleState:
    positions: np.ndarray
    t: float
    event_count: int
    rng: np.random.Generator


@dataclass
class EventRecord:
    t_m: float
    i: int
    j: int
    pre_positions_hash: str


@dataclass
class EventLog:
    t: np.ndarray
    i: np.ndarray
    j: np.ndarray

    @property
    def count(self):
        return self.t.size


@dataclass
class SimulationResult:
    times: np.ndarray
    positions: np.ndarray  # (len(times), n)
    events: EventLog
    n: int


@dataclass
class UpperCouplingResult:
    event_times: np.ndarray
    x: np.ndarray       # (events + 1, n), sorted rows
    x_plus: np.ndarray
    violations: int


@dataclass
class LowerCouplingResult:
    event_times: np.ndarray
    x_minus: np.ndarray  # (events + 1, m), sorted rows
    x: np.ndarray        # (events + 1, n), sorted rows
    violations: int


@dataclass
class ColouredResult:
    times: np.ndarray
    blue: np.ndarray          # (len(times), n)
    populations: np.ndarray   # total particle count at each time
    all_positions: list       # ragged: every particle, blue and red


@dataclass(frozen=True)
class InitialCondition:
    """Initial placement of the n particles.

    Density kinds place particles at the quantiles (i - 1/2)/n, which is
    deterministic and converges weakly to the density; pass iid=True to
    sample instead.
    """

    kind: str
    params: tuple = ()
    iid: bool = False

    @classmethod
    def gaussian(cls, iid=False):
        return cls("gaussian", (), iid)

    @classmethod
    def uniform(cls, a, b, iid=False):
        if not b > a:
            raise ValidationError(f"empty support [{a}, {b}]")
        return cls("uniform", (float(a), float(b)), iid)

    @classmethod
    def exponential_tail(cls, iid=False):
        return cls("exponential-tail", (), iid)

    @classmethod
    def point_mass(cls, x0):
        return cls("point-mass", (float(x0),))

    @classmethod
    def explicit(cls, positions):
        xs = np.asarray(positions, dtype=float)
        if xs.ndim != 1:
            raise ValidationError("explicit positions must be a flat vector")
        return cls("explicit", (xs,))

    def build(self, n, rng):
        if self.kind == "explicit":
            xs = self.params[0]
            if xs.size != n:
                raise ValidationError(f"{xs.size} explicit positions for n = {n}")
            return xs.copy()
        if self.kind == "point-mass":
            return np.full(n, self.params[0])
        q = (np.arange(n) + 0.5) / n
        if self.kind == "gaussian":
            return rng.standard_normal(n) if self.iid else ndtri(q)
        if self.kind == "uniform":
            a, b = self.params
            return rng.uniform(a, b, n) if self.iid else a + (b - a) * q
        if self.kind == "exponential-tail":
            return rng.standard_exponential(n) if self.iid else -np.log1p(-q)
        raise ValidationError(f"unknown initial condition {self.kind!r}")


@dataclass
class EngineConfig:
    n: int
    psi: object  # SelectionPsi, or LeftmostKill for always-kill-leftmost
    rate: object
    T: float
    init: InitialCondition
    seed: object
    snapshot_times: object = field(default_factory=list)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise ValidationError(f"need at least 2 particles, got {self.n!r}")
        if not isinstance(self.psi, (SelectionPsi, LeftmostKill)):
            raise ValidationError(f"psi must be a selection density, got {self.psi!r}")
        if not isinstance(self.init, InitialCondition):
            raise ValidationError(f"init must be an InitialCondition, got {self.init!r}")
        if not self.T > 0.0:
            raise ValidationError(f"horizon must be positive, got {self.T!r}")
        self.rate.validate_on(self.T)
        snaps = np.asarray(self.snapshot_times, dtype=float)
        if snaps.ndim != 1:
            raise ValidationError("snapshot_times must be a flat list")
        if snaps.size:
            if np.any(np.diff(snaps) < 0.0):
                raise ValidationError("snapshot_times must be sorted")
            if snaps[0] < 0.0 or snaps[-1] > self.T + 1e-12:
                raise ValidationError(
                    f"snapshots must lie in [0, {self.T}], got [{snaps[0]}, {snaps[-1]}]"
                )
        self.snapshot_times = snaps


# ------------------------------------------------------------------ core ops


def _draw_next_event(t, rng, rate, n, horizon):
    """First arrival after t of a Poisson process with intensity n*r."""
    r_max = rate.r_max
    if rate.kind == "constant":
        value = rate(t)
        if value > r_max * (1.0 + 1e-12) + _RATE_SLACK:
            raise AssumptionViolation(f"rate {value} exceeds stated bound {r_max}")
        if value <= 0.0:
            return math.inf
        return t + rng.exponential(1.0 / (n * value))
    if r_max <= 0.0:
        return math.inf
    # thinning against the constant bound n * r_max; marginal is exact
    while True:
        t = t + rng.exponential(1.0 / (n * r_max))
        if t > horizon:
            return math.inf
        observed = rate(t)
        if observed > r_max * (1.0 + 1e-12) + _RATE_SLACK:
            raise AssumptionViolation(f"rate {observed} at t = {t} exceeds bound {r_max}")
        if rng.random() * r_max < observed:
            return t


def next_event_time(state, rate, n=None, horizon=math.inf):
    """Draw the next branching time after state.t; does not advance state."""
    if n is None:
        n = state.positions.size
    return _draw_next_event(state.t, state.rng, rate, n, horizon)


def advance_brownian(state, dt):
    """Exact Gaussian increments over a duration with no events in it."""
    if dt < 0.0:
        raise ValidationError(f"negative duration {dt}")
    if dt > 0.0:
        state.positions += math.sqrt(dt) * state.rng.standard_normal(state.positions.size)
        state.t += dt
    return state


def rank_select(positions, k, verify=False):
    """Value of the k-th smallest position (1-based), expected O(n)."""
    n = positions.size
    if not 1 <= k <= n:
        raise RankOutOfRange(f"rank {k} outside [1, {n}]")
    value = np.partition(positions, k - 1)[k - 1]
    if verify:
        assert value == np.sort(positions)[k - 1]
    return float(value)


def _rank_slot(positions, k):
    return int(np.argpartition(positions, k - 1)[k - 1])


def apply_event(state, i, j):
    """Overwrite the rank-j particle with a copy of the rank-i one."""
    n = state.positions.size
    for k in (i, j):
        if not 1 <= k <= n:
            raise RankOutOfRange(f"rank {k} outside [1, {n}]")
    record = EventRecord(
        t_m=state.t, i=i, j=j, pre_positions_hash=_positions_digest(state.positions)
    )
    if i != j:
        value = rank_select(state.positions, i)
        state.positions[_rank_slot(state.positions, j)] = value
    state.event_count += 1
    return record


# ------------------------------------------------------------------ simulate


def _draw_ranks(state, kill_cum):
    """One event's (I, J): I via a uniform particle, J via the kill law."""
    positions = state.positions
    slot = int(state.rng.integers(positions.size))
    value = positions[slot]
    # a uniform particle holds a uniform rank; recover the rank for the log
    i = int(np.count_nonzero(positions < value)) + 1
    if kill_cum is None:
        j = 1
    else:
        u = state.rng.random()
        j = min(int(np.searchsorted(kill_cum, u, side="right")) + 1, positions.size)
    return i, j, value


def simulate(config):
    """Run the system to its horizon, emitting snapshots and an event log.

    Snapshots falling exactly on an event time see the post-event state.
    Identical (config, seed) pairs give bit-identical output.
    """
    rng = _rng_from(config.seed)
    state = ParticleState(
        positions=config.init.build(config.n, rng), t=0.0, event_count=0, rng=rng
    )
    nbbm = isinstance(config.psi, LeftmostKill)
    kill_cum = None if nbbm else _kill_cum(config.psi, config.n)
    snaps = config.snapshot_times
    out = np.empty((snaps.size, config.n))
    si = 0
    while si < snaps.size and snaps[si] <= 0.0:
        out[si] = state.positions
        si += 1
    ev_t, ev_i, ev_j = [], [], []
    while True:
        te = next_event_time(state, config.rate, horizon=config.T)
        if te > config.T:
            while si < snaps.size:
                advance_brownian(state, snaps[si] - state.t)
                out[si] = state.positions
                si += 1
            break
        while si < snaps.size and snaps[si] < te:
            advance_brownian(state, snaps[si] - state.t)
            out[si] = state.positions
            si += 1
        advance_brownian(state, te - state.t)
        i, j, value = _draw_ranks(state, kill_cum)
        if i != j:
            slot = int(np.argmin(state.positions)) if j == 1 else _rank_slot(state.positions, j)
            state.positions[slot] = value
        state.event_count += 1
        ev_t.append(te)
        ev_i.append(i)
        ev_j.append(j)
        while si < snaps.size and snaps[si] <= state.t:
            out[si] = state.positions
            si += 1
    events = EventLog(
        t=np.asarray(ev_t, dtype=float),
        i=np.asarray(ev_i, dtype=np.int64),
        j=np.asarray(ev_j, dtype=np.int64),
    )
    return SimulationResult(times=snaps.copy(), positions=out, events=events, n=config.n)


# ------------------------------------------------------------------ couplings


def _branch_sorted(arr, i, j):
    """Event on a sorted vector: drop rank j, re-insert a copy of rank i."""
    if i == j:
        return arr
    value = arr[i - 1]
    arr = np.delete(arr, j - 1)
    return np.insert(arr, int(np.searchsorted(arr, value)), value)


def _require_density(config):
    if not isinstance(config.psi, SelectionPsi):
        raise ValidationError("coupled runs need a selection density, not the leftmost rule")


def simulate_coupled_upper(config):
    """Pair the system with an always-kill-leftmost twin on shared noise.

    Both consume the same event clock, the same branch ranks I, and the
    same rank-indexed Gaussian increments; only the kill rank differs
    (J versus 1).  Killing the leftmost can only shift mass rightward, so
    the twin dominates rank by rank, pathwise; violations counts the
    (expected zero) exceptions exactly, with no tolerance.
    """
    _require_density(config)
    rng = _rng_from(config.seed)
    n = config.n
    x = np.sort(config.init.build(n, rng))
    xp = x.copy()
    kill_cum = _kill_cum(config.psi, n)
    t = 0.0
    times, rows_x, rows_xp = [0.0], [x.copy()], [xp.copy()]
    violations = 0
    while True:
        te = _draw_next_event(t, rng, config.rate, n, config.T)
        if te > config.T:
            break
        w = math.sqrt(te - t) * rng.standard_normal(n)
        # stream k drives whichever particle held rank k at the last event
        x = np.sort(x + w)
        xp = np.sort(xp + w)
        i = int(rng.integers(n)) + 1
        j = min(int(np.searchsorted(kill_cum, rng.random(), side="right")) + 1, n)
        x = _branch_sorted(x, i, j)
        xp = _branch_sorted(xp, i, 1)
        t = te
        violations += int(np.any(x > xp))
        times.append(t)
        rows_x.append(x.copy())
        rows_xp.append(xp.copy())
    return UpperCouplingResult(
        event_times=np.asarray(times),
        x=np.asarray(rows_x),
        x_plus=np.asarray(rows_xp),
        violations=violations,
    )


def simulate_coupled_lower(config, p):
    """Couple a floor(p*n)-particle leftmost-kill system under the top block.

    Needs the selection density to vanish on [1-p, 1] (so the top block
    never loses a member to killing) and unit branching rate.  The small
    system's rank k shares the Gaussian stream of rank n - m + k and
    branches exactly when I lands in the top block; its rank-k particle
    then stays below the (n - m + k)-th of the full system, pathwise.
    """
    _require_density(config)
    if not (config.rate.kind == "constant" and abs(config.rate(0.0) - 1.0) < 1e-12):
        raise AssumptionViolation("lower coupling is built for unit branching rate")
    if config.psi.max_on(1.0 - p, 1.0) > 1e-12:
        raise AssumptionViolation(f"selection density is positive on [{1 - p}, 1]")
    n = config.n
    m = int(math.floor(p * n + 1e-9))
    if not 1 <= m <= n:
        raise ValidationError(f"block size floor(p*n) = {m} out of range")
    rng = _rng_from(config.seed)
    x = np.sort(config.init.build(n, rng))
    xm = x[n - m:].copy()
    kill_cum = _kill_cum(config.psi, n)
    t = 0.0
    times, rows_xm, rows_x = [0.0], [xm.copy()], [x.copy()]
    violations = 0
    while True:
        te = _draw_next_event(t, rng, config.rate, n, config.T)
        if te > config.T:
            break
        w = math.sqrt(te - t) * rng.standard_normal(n)
        x = np.sort(x + w)
        xm = np.sort(xm + w[n - m:])
        i = int(rng.integers(n)) + 1
        j = min(int(np.searchsorted(kill_cum, rng.random(), side="right")) + 1, n)
        x = _branch_sorted(x, i, j)
        if i >= n - m + 1:
            xm = _branch_sorted(xm, i - (n - m), 1)
        t = te
        violations += int(np.any(xm > x[n - m:]))
        times.append(t)
        rows_xm.append(xm.copy())
        rows_x.append(x.copy())
    return LowerCouplingResult(
        event_times=np.asarray(times),
        x_minus=np.asarray(rows_xm),
        x=np.asarray(rows_x),
        violations=violations,
    )


# --------------------------------------------------------------- coloured run


def simulate_coloured_bbm(config, cap=POPULATION_CAP):
    """Grow a free branching population carrying n blue particles inside.

    Every particle branches at rate r(t) and nobody dies, so the total
    population grows like exp(int r).  At each branching of a blue
    particle the child is blue and one blue particle, chosen by the
    rank-J law over the n pre-event blues, is repainted red; the blue
    subset then evolves exactly as the selection system in law.
    """
    _require_density(config)
    rng = _rng_from(config.seed)
    n = config.n
    kill_cum = _kill_cum(config.psi, n)
    capacity = max(4 * n, 1024)
    pos = np.empty(capacity)
    blue = np.zeros(capacity, dtype=bool)
    pos[:n] = config.init.build(n, rng)
    blue[:n] = True
    count = n
    t = 0.0
    snaps = config.snapshot_times
    si = 0
    out_blue = np.empty((snaps.size, n))
    out_all = [None] * snaps.size
    out_pop = np.empty(snaps.size, dtype=np.int64)

    def emit(idx):
        out_blue[idx] = pos[:count][blue[:count]]
        out_all[idx] = pos[:count].copy()
        out_pop[idx] = count

    def advance(dt):
        nonlocal t
        if dt > 0.0:
            pos[:count] += math.sqrt(dt) * rng.standard_normal(count)
            t += dt

    while si < snaps.size and snaps[si] <= 0.0:
        emit(si)
        si += 1
    while True:
        te = _draw_next_event(t, rng, config.rate, count, config.T)
        if te > config.T:
            while si < snaps.size:
                advance(snaps[si] - t)
                emit(si)
                si += 1
            break
        while si < snaps.size and snaps[si] < te:
            advance(snaps[si] - t)
            emit(si)
            si += 1
        advance(te - t)
        if count >= cap:
            raise PopulationCap(f"population reached {count} at t = {t}")
        if count >= capacity:
            capacity *= 2
            pos = np.resize(pos, capacity)
            blue = np.resize(blue, capacity)
        brancher = int(rng.integers(count))
        if blue[brancher]:
            # repaint the rank-J blue red before the blue child joins
            blue_slots = np.flatnonzero(blue[:count])
            u = rng.random()
            j = min(int(np.searchsorted(kill_cum, u, side="right")) + 1, n)
            vals = pos[blue_slots]
            blue[blue_slots[int(np.argpartition(vals, j - 1)[j - 1])]] = False
            blue[count] = True
        else:
            blue[count] = False
        pos[count] = pos[brancher]
        count += 1
        while si < snaps.size and snaps[si] <= t:
            emit(si)
            si += 1
    return ColouredResult(
        times=snaps.copy(), blue=out_blue, populations=out_pop, all_positions=out_all
    )


# ---------------------------------------------------------------------- csv


def write_snapshot_csv(path, result):
    """Rows t,particle_index,x with full-precision floats, index 1-based."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "particle_index", "x"])
        for t, row in zip(result.times, result.positions):
            for idx, x in enumerate(row, start=1):
                writer.writerow([repr(float(t)), idx, repr(float(x))])


def write_event_log_csv(path, events):
    """Rows m,t_m,i,j with m counting events from 1."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "t_m", "i", "j"])
        for m in range(events.count):
            writer.writerow(
                [m + 1, repr(float(events.t[m])), int(events.i[m]), int(events.j[m])]
            )
