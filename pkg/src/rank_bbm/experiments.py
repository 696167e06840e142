"""Replica experiments tying the particle system to its scaling limits.

Each runner here repeats a simulation over independent replicas, reduces
the paths to one summary table, and leaves every threshold visible in
the call signature rather than buried in the body.  The Kolmogorov
distance between the empirical tail and a PDE profile is computed
exactly from the step structure, not on a grid of probe points, so a
reported value is the true supremum for that replica.

Replicas draw their generators from spawn keys of a single master seed;
tables record that seed, and reruns with the same arguments reproduce
them bit for bit.  Set RANK_BBM_THREADS to parallelise replicas, which
does not change the numbers.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .engine import EngineConfig, InitialCondition, simulate, simulate_coloured_bbm
from .errors import AssumptionViolation, NoGapFound, ValidationError
from .pde import PdeConfig, solve, step_init
from .selection import BranchingRate, g_from_psi, preset

KS_GRID_TOL = 1e-12


# --------------------------------------------------------------------- types


@dataclass
class EcdfSnapshot:
    """Empirical tail CDF at one time: f[i] is the fraction at or right
    of xs[i], with xs ascending."""

    t: float
    xs: np.ndarray
    f: np.ndarray


@dataclass
class ConvergenceRow:
    n: int
    t: float
    ks: float
    replicas: int
    stderr: float


@dataclass
class HydroTable:
    rows: list
    seed: int
    dx: float
    domain: tuple


@dataclass
class SpeedEstimate:
    n: int
    v_min: float
    v_max: float
    v_hat: float
    ci_half_width: float
    fit_window: tuple
    replicas: int
    se_min: float = 0.0
    se_max: float = 0.0
    se_v_hat: float = 0.0


@dataclass
class VelocitySweep:
    rows: list
    slope: float
    intercept: float
    seed: int


@dataclass
class SplitCloudReport:
    fractions: np.ndarray
    mean_right_fraction: float
    stderr: float
    min_gap: float
    replicas: int
    seed: int


@dataclass
class DominationReport:
    times: np.ndarray
    pop_mean: np.ndarray
    pop_stderr: np.ndarray
    pop_expected: np.ndarray
    violations: int
    replicas: int
    seed: int


# ------------------------------------------------------------------- helpers


def _replica_map(fn, items):
    workers = int(os.environ.get("RANK_BBM_THREADS", "1"))
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _spawned_seed(master, *key):
    return np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))


def tail_ecdf(positions, t=0.0):
    xs = np.sort(np.asarray(positions, dtype=float))
    n = xs.size
    f = (n - np.arange(n)) / n
    return EcdfSnapshot(t=float(t), xs=xs, f=f)


def ks_distance(positions, grid, u):
    """Exact sup distance between the empirical tail CDF and a sampled
    profile, linearly interpolated between grid nodes.

    The empirical tail is piecewise constant and the interpolant is
    piecewise linear, so the supremum is attained either at a particle
    (approached from both sides) or at a grid node; all three candidate
    sets are evaluated in full.
    """
    xs = np.sort(np.asarray(positions, dtype=float))
    n = xs.size
    if n == 0:
        raise ValidationError("no particles to compare")
    at = (n - np.arange(n)) / n
    after = at - 1.0 / n
    u_data = np.interp(xs, grid, u)
    d = max(np.max(np.abs(at - u_data)), np.max(np.abs(after - u_data)))
    node_f = (n - np.searchsorted(xs, grid, side="left")) / n
    return float(max(d, np.max(np.abs(node_f - u))))


def initial_tail_profile(init):
    """Tail CDF of the measure an InitialCondition converges to, as a
    callable for the PDE solver."""
    kind = init.kind
    if kind == "gaussian":
        return lambda x: ndtr(-np.asarray(x, dtype=float))
    if kind == "uniform":
        a, b = init.params
        return lambda x: np.clip((b - np.asarray(x, dtype=float)) / (b - a), 0.0, 1.0)
    if kind == "exponential-tail":
        return lambda x: np.exp(-np.clip(np.asarray(x, dtype=float), 0.0, 700.0))
    if kind == "point-mass":
        return step_init(init.params[0])
    if kind == "explicit":
        xs = np.sort(init.params[0])

        def profile(x):
            x = np.asarray(x, dtype=float)
            return (xs.size - np.searchsorted(xs, x, side="left")) / xs.size

        return profile
    raise ValidationError(f"no tail profile for initial condition {kind!r}")


def _support_interval(init):
    if init.kind == "gaussian":
        return (-5.0, 5.0)
    if init.kind == "uniform":
        return init.params
    if init.kind == "exponential-tail":
        return (0.0, 12.0)
    if init.kind == "point-mass":
        return (init.params[0], init.params[0])
    xs = init.params[0]
    return (float(xs.min()), float(xs.max()))


def _auto_domain(init, T, rate, dx):
    # Heuristic box: initial support plus diffusive slack plus front
    # travel at the KPP bound for the stated rate ceiling.  Too tight a
    # box trips the solver's boundary guard, which names the fix.
    lo, hi = _support_interval(init)
    margin = 6.0 + 2.0 * T * max(1.0, math.sqrt(2.0 * rate.r_max))
    lo = math.floor((lo - margin) / dx) * dx
    hi = math.ceil((hi + margin) / dx) * dx
    return (round(lo, 9), round(hi, 9))


# --------------------------------------------------------- hydro convergence


def run_hydro_convergence(
    psi, rate, rho, n_list, t_list, replicas, seed, domain=None, dx=0.01
):
    """Kolmogorov distance between particle ensembles and the limit PDE.

    One high-resolution PDE solve is shared by every population size;
    each (n, t) cell averages the exact KS distance over the replicas.
    """
    t_list = sorted(float(t) for t in t_list)
    if not t_list or t_list[0] < 0.0:
        raise ValidationError("comparison times must be nonnegative")
    horizon = t_list[-1]
    if domain is None:
        domain = _auto_domain(rho, horizon, rate, dx)
    pde = solve(
        PdeConfig(
            g=g_from_psi(psi),
            rate=rate,
            domain=domain,
            dx=dx,
            T=horizon,
            init=initial_tail_profile(rho),
            snapshot_times=t_list,
        )
    )

    rows = []
    for ni, n in enumerate(n_list):
        def one(k, ni=ni, n=n):
            cfg = EngineConfig(
                n=n,
                psi=psi,
                rate=rate,
                T=horizon,
                init=rho,
                seed=_spawned_seed(seed, ni, k),
                snapshot_times=t_list,
            )
            res = simulate(cfg)
            return [
                ks_distance(res.positions[j], pde.grid, pde.u[j])
                for j in range(len(t_list))
            ]

        per = np.asarray(_replica_map(one, range(replicas)), dtype=float)
        for j, t in enumerate(t_list):
            ks = per[:, j]
            stderr = ks.std(ddof=1) / math.sqrt(replicas) if replicas > 1 else 0.0
            rows.append(
                ConvergenceRow(
                    n=int(n), t=t, ks=float(ks.mean()), replicas=replicas,
                    stderr=float(stderr),
                )
            )
    return HydroTable(rows=rows, seed=int(seed), dx=dx, domain=domain)


# ------------------------------------------------------------ velocity sweep


def _require_zero_top_block(psi):
    # A nonzero polynomial cannot vanish on a subinterval, so scanning
    # whole pieces from the right finds the exact zero block.
    q = 1.0
    for lo, hi, _ in reversed(psi.pieces):
        if psi.max_on(lo, 1.0) <= 1e-12:
            q = lo
        else:
            break
    if q >= 1.0 - 1e-12:
        raise AssumptionViolation(
            "selection density must vanish on a block [1 - p, 1]: "
            "the speed theory needs the top ranks immune to killing"
        )
    return 1.0 - q


def run_velocity_sweep(
    psi,
    n_list,
    horizon,
    fit_window=None,
    replicas=8,
    seed=0,
    snapshot_spacing=0.5,
):
    """Front speed of the extreme particles across population sizes.

    Requires a selection density with an untouched top block and mass
    next to rank one, under unit branching rate; those are the standing
    assumptions of the finite-N speed expansion.  Each replica fits a
    line to the leftmost and rightmost positions over the fit window
    (after a default burn-in of three eighths of the horizon), and the
    sweep closes with a regression of the mean speed on 1/log(n)^2.
    """
    _require_zero_top_block(psi)
    if psi(0.0) <= 1e-9:
        raise AssumptionViolation(
            "selection density must be positive next to rank one"
        )
    horizon = float(horizon)
    if fit_window is None:
        fit_window = (0.375 * horizon, horizon)
    lo, hi = (float(fit_window[0]), float(fit_window[1]))
    if not 0.0 <= lo < hi <= horizon + 1e-9:
        raise ValidationError(f"fit window {fit_window} outside [0, {horizon}]")
    steps = int(round(horizon / snapshot_spacing))
    times = np.linspace(0.0, horizon, steps + 1)
    mask = (times >= lo - 1e-9) & (times <= hi + 1e-9)
    if mask.sum() < 3:
        raise ValidationError("fit window holds fewer than three snapshots")

    rate = BranchingRate.constant(1.0)
    init = InitialCondition.point_mass(0.0)
    rows = []
    for ni, n in enumerate(n_list):
        def one(k, ni=ni, n=n):
            cfg = EngineConfig(
                n=n,
                psi=psi,
                rate=rate,
                T=horizon,
                init=init,
                seed=_spawned_seed(seed, ni, k),
                snapshot_times=times,
            )
            res = simulate(cfg)
            lo_fit = np.polyfit(times[mask], res.positions.min(axis=1)[mask], 1)
            hi_fit = np.polyfit(times[mask], res.positions.max(axis=1)[mask], 1)
            return (lo_fit[0], hi_fit[0])

        slopes = np.asarray(_replica_map(one, range(replicas)), dtype=float)
        v_min = float(slopes[:, 0].mean())
        v_max = float(slopes[:, 1].mean())
        per_rep_v = slopes.mean(axis=1)  # the two slopes share a replica
        if replicas > 1:
            se = slopes.std(axis=0, ddof=1) / math.sqrt(replicas)
            se_v = per_rep_v.std(ddof=1) / math.sqrt(replicas)
        else:
            se = np.zeros(2)
            se_v = 0.0
        rows.append(
            SpeedEstimate(
                n=int(n),
                v_min=v_min,
                v_max=v_max,
                v_hat=0.5 * (v_min + v_max),
                ci_half_width=float(1.96 * math.hypot(se[0], se[1])),
                fit_window=(lo, hi),
                replicas=replicas,
                se_min=float(se[0]),
                se_max=float(se[1]),
                se_v_hat=float(se_v),
            )
        )

    if len(rows) >= 2:
        x = np.array([1.0 / math.log(row.n) ** 2 for row in rows])
        y = np.array([row.v_hat for row in rows])
        slope, intercept = np.polyfit(x, y, 1)
    else:
        slope, intercept = float("nan"), float("nan")
    return VelocitySweep(
        rows=rows, slope=float(slope), intercept=float(intercept), seed=int(seed)
    )


# --------------------------------------------------------------- split cloud


def run_split_cloud(n, horizon, replicas, seed, psi=None, min_gap=5.0):
    """Fraction of particles in the right cloud after the population
    tears in two.

    The classifier sorts the final positions, looks for the widest gap
    whose midpoint lies in the middle half of the occupied range, and
    counts the particles to its right.  A widest gap under min_gap
    raises NoGapFound: either the run is too short for the clouds to
    separate or the selection density does not split at all.
    """
    if psi is None:
        psi = preset("split-cloud")
    rate = BranchingRate.constant(1.0)
    init = InitialCondition.point_mass(0.0)

    def one(k):
        cfg = EngineConfig(
            n=n,
            psi=psi,
            rate=rate,
            T=float(horizon),
            init=init,
            seed=_spawned_seed(seed, k),
            snapshot_times=[float(horizon)],
        )
        xs = np.sort(simulate(cfg).positions[-1])
        gaps = np.diff(xs)
        mids = 0.5 * (xs[1:] + xs[:-1])
        span = xs[-1] - xs[0]
        inner = (mids >= xs[0] + 0.25 * span) & (mids <= xs[-1] - 0.25 * span)
        if not inner.any() or gaps[inner].max() < min_gap:
            widest = gaps[inner].max() if inner.any() else 0.0
            raise NoGapFound(
                f"widest central gap {widest:.3g} is under {min_gap} at "
                f"t = {horizon}: no split; a longer horizon may separate "
                "the clouds if the selection density splits at all"
            )
        candidates = np.flatnonzero(inner)
        idx = candidates[np.argmax(gaps[candidates])]
        return (n - idx - 1) / n

    fractions = np.asarray(_replica_map(one, range(replicas)), dtype=float)
    stderr = (
        fractions.std(ddof=1) / math.sqrt(replicas) if replicas > 1 else 0.0
    )
    return SplitCloudReport(
        fractions=fractions,
        mean_right_fraction=float(fractions.mean()),
        stderr=float(stderr),
        min_gap=float(min_gap),
        replicas=replicas,
        seed=int(seed),
    )


# ---------------------------------------------------------------- domination


def run_domination_check(psi, rate, n, horizon, replicas, seed, sample_times=None):
    """Pathwise tail domination of the selected system by the free one.

    Each replica runs the two-colour construction and checks, at every
    sample time and rank, that the k-th rightmost blue particle sits at
    or left of the k-th rightmost particle overall; the count of rank
    violations is reported and is zero by construction.  The table also
    tracks the total population against n times the exponential of the
    integrated rate.
    """
    if sample_times is None:
        sample_times = np.linspace(0.0, float(horizon), 9)
    times = np.asarray(sample_times, dtype=float)

    def one(k):
        cfg = EngineConfig(
            n=n,
            psi=psi,
            rate=rate,
            T=float(horizon),
            init=InitialCondition.point_mass(0.0),
            seed=_spawned_seed(seed, k),
            snapshot_times=times,
        )
        res = simulate_coloured_bbm(cfg)
        bad = 0
        pops = np.empty(times.size)
        for j in range(times.size):
            everyone = np.sort(res.all_positions[j])[::-1]
            blue = np.sort(res.blue[j])[::-1]
            bad += int(np.count_nonzero(blue > everyone[: blue.size]))
            pops[j] = res.populations[j]
        return bad, pops

    results = _replica_map(one, range(replicas))
    violations = sum(r[0] for r in results)
    pops = np.stack([r[1] for r in results])
    pop_mean = pops.mean(axis=0)
    pop_stderr = (
        pops.std(axis=0, ddof=1) / math.sqrt(replicas)
        if replicas > 1
        else np.zeros(times.size)
    )
    pop_expected = np.array(
        [n * math.exp(rate.integral(0.0, t)) for t in times]
    )
    assert violations == 0, "colour construction broke tail domination"
    return DominationReport(
        times=times,
        pop_mean=pop_mean,
        pop_stderr=pop_stderr,
        pop_expected=pop_expected,
        violations=violations,
        replicas=replicas,
        seed=int(seed),
    )


# ----------------------------------------------------------------- csv output


def _write_rows(path, header, rows):
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_hydro_csv(path, table):
    _write_rows(
        path,
        ["n", "t", "ks_mean", "ks_stderr", "replicas"],
        [
            [row.n, repr(row.t), repr(row.ks), repr(row.stderr), row.replicas]
            for row in table.rows
        ],
    )


def write_velocity_csv(path, sweep):
    _write_rows(
        path,
        ["n", "v_min", "v_max", "ci", "window"],
        [
            [
                row.n,
                repr(row.v_min),
                repr(row.v_max),
                repr(row.ci_half_width),
                f"{row.fit_window[0]:g}:{row.fit_window[1]:g}",
            ]
            for row in sweep.rows
        ],
    )


def write_split_csv(path, report):
    _write_rows(
        path,
        ["replica", "right_fraction"],
        [[k, repr(frac)] for k, frac in enumerate(report.fractions)],
    )


def write_domination_csv(path, report):
    _write_rows(
        path,
        ["t", "pop_mean", "pop_expected"],
        [
            [repr(float(t)), repr(float(m)), repr(float(e))]
            for t, m, e in zip(report.times, report.pop_mean, report.pop_expected)
        ],
    )
