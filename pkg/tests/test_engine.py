"""Event-driven particle engine.

Oracles: exact rate integrals for Poisson event counts, the normal CDF
for free diffusion, full sorts for rank selection, rank_kill_probs for
the logged kill-rank marginal, the closed-form population growth of the
coloured run, and the finite-difference solver for one hydrodynamic
snapshot.  Coupling dominance is asserted exactly, pathwise.
"""

import csv
from collections import Counter

import numpy as np
import pytest
from scipy import integrate, stats
from scipy.special import ndtr, ndtri

from rank_bbm.engine import (
    EngineConfig,
    InitialCondition,
    ParticleState,
    advance_brownian,
    apply_event,
    next_event_time,
    rank_select,
    simulate,
    simulate_coloured_bbm,
    simulate_coupled_lower,
    simulate_coupled_upper,
    write_event_log_csv,
    write_snapshot_csv,
)
from rank_bbm.errors import (
    AssumptionViolation,
    PopulationCap,
    RankOutOfRange,
    ValidationError,
)
from rank_bbm.pde import PdeConfig, solve
from rank_bbm.selection import (
    LEFTMOST_KILL,
    BranchingRate,
    SelectionPsi,
    g_from_psi,
    preset,
    rank_kill_probs,
)

RATE1 = BranchingRate.constant(1.0)


def fresh_state(n=10, seed=0, positions=None):
    if positions is None:
        positions = np.zeros(n)
    return ParticleState(
        positions=np.asarray(positions, dtype=float),
        t=0.0,
        event_count=0,
        rng=np.random.default_rng(seed),
    )


def count_events(rate, n, horizon, seed):
    state = fresh_state(n=n, seed=seed)
    count = 0
    while True:
        t = next_event_time(state, rate, horizon=horizon)
        if t > horizon:
            return count
        state.t = t
        count += 1


# ------------------------------------------------------------ event clock


def test_event_count_constant_rate():
    # Poisson with intensity n*r: mean count over [0,1] is n
    runs = 200
    counts = [count_events(RATE1, 1000, 1.0, seed) for seed in range(runs)]
    tol = 3.0 * np.sqrt(1000.0 / runs)
    assert abs(np.mean(counts) - 1000.0) < tol


def test_event_clock_silent_where_rate_vanishes():
    rate = BranchingRate.piecewise([(0.0, 1.0, [1.0]), (1.0, 2.0, [0.0]), (2.0, 3.0, [1.0])])
    state = fresh_state(n=200, seed=3)
    times = []
    while True:
        t = next_event_time(state, rate, horizon=3.0)
        if t > 3.0:
            break
        state.t = t
        times.append(t)
    times = np.asarray(times)
    assert times.size > 0
    assert not np.any((times > 1.0) & (times < 2.0))


def test_event_count_sinusoidal_rate():
    rate = BranchingRate.sinusoidal(1.0, 0.5)
    horizon = 2.0 * np.pi
    n = 500
    expected, _ = integrate.quad(lambda t: n * (1.0 + 0.5 * np.sin(t)), 0.0, horizon)
    runs = 40
    counts = [count_events(rate, n, horizon, 100 + seed) for seed in range(runs)]
    tol = 3.0 * np.sqrt(expected / runs)
    assert abs(np.mean(counts) - expected) < tol


def test_event_clock_rejects_understated_bound():
    rate = BranchingRate.constant(2.0)
    rate.r_max = 1.0  # deliberately broken thinning bound
    state = fresh_state(n=100, seed=0)
    with pytest.raises(AssumptionViolation):
        for _ in range(200):
            state.t = next_event_time(state, rate, horizon=10.0)


# ------------------------------------------------------- brownian motion


def test_advance_zero_dt_is_identity():
    state = fresh_state(n=50, seed=1, positions=np.arange(50.0))
    before = state.positions.copy()
    advance_brownian(state, 0.0)
    assert np.array_equal(state.positions, before)
    assert state.t == 0.0


def test_increment_variance_matches_dt():
    state = fresh_state(n=100_000, seed=2)
    advance_brownian(state, 2.0)
    assert abs(np.var(state.positions) - 2.0) < 0.05
    assert state.t == 2.0


def test_free_diffusion_matches_normal_tail():
    cfg = EngineConfig(
        n=100_000,
        psi=preset("uniform"),
        rate=BranchingRate.constant(0.0),
        T=1.0,
        init=InitialCondition.point_mass(0.0),
        seed=11,
        snapshot_times=[1.0],
    )
    res = simulate(cfg)
    assert res.events.count == 0
    frac = np.mean(res.positions[-1] > 1.0)
    assert abs(frac - ndtr(-1.0)) < 0.005


# ------------------------------------------------------------- rank ops


def test_rank_select_examples():
    assert rank_select(np.array([3.0, 1.0, 2.0]), 2) == 2.0
    assert rank_select(np.array([5.0, 5.0, 1.0]), 3) == 5.0


def test_rank_select_median_matches_full_sort():
    rng = np.random.default_rng(9)
    xs = rng.normal(size=1001)
    assert rank_select(xs, 501, verify=True) == np.sort(xs)[500]


def test_rank_select_rejects_bad_rank():
    xs = np.zeros(3)
    with pytest.raises(RankOutOfRange):
        rank_select(xs, 0)
    with pytest.raises(RankOutOfRange):
        rank_select(xs, 4)


def test_apply_event_moves_rank_j_to_rank_i():
    state = fresh_state(positions=np.array([0.0, 1.0, 2.0]))
    record = apply_event(state, 3, 1)
    assert Counter(state.positions.tolist()) == Counter([1.0, 2.0, 2.0])
    assert record.i == 3 and record.j == 1
    assert state.event_count == 1


def test_apply_event_noop_when_ranks_coincide():
    state = fresh_state(positions=np.array([4.0, -1.0, 0.5]))
    before = state.positions.copy()
    apply_event(state, 2, 2)
    assert np.array_equal(state.positions, before)


def test_apply_event_hash_is_reproducible():
    a = fresh_state(positions=np.array([0.0, 1.0, 2.0]))
    b = fresh_state(positions=np.array([0.0, 1.0, 2.0]))
    ra = apply_event(a, 3, 1)
    rb = apply_event(b, 3, 1)
    assert ra.pre_positions_hash == rb.pre_positions_hash


def test_apply_event_rejects_bad_rank():
    state = fresh_state(positions=np.zeros(3))
    with pytest.raises(RankOutOfRange):
        apply_event(state, 4, 1)


# ------------------------------------------------------------- simulate


def small_config(**kw):
    base = dict(
        n=50,
        psi=preset("fisher"),
        rate=RATE1,
        T=2.0,
        init=InitialCondition.uniform(-1.0, 0.0),
        seed=17,
        snapshot_times=np.linspace(0.0, 2.0, 11),
    )
    base.update(kw)
    return EngineConfig(**base)


def test_population_conserved_at_every_snapshot():
    res = simulate(small_config())
    assert res.positions.shape == (11, 50)
    assert np.all(np.isfinite(res.positions))
    assert res.events.count > 0
    assert np.all((res.events.i >= 1) & (res.events.i <= 50))
    assert np.all((res.events.j >= 1) & (res.events.j <= 50))


def test_same_seed_is_bit_identical():
    a = simulate(small_config())
    b = simulate(small_config())
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.events.t, b.events.t)
    assert np.array_equal(a.events.i, b.events.i)
    assert np.array_equal(a.events.j, b.events.j)


def test_different_seed_differs():
    a = simulate(small_config())
    b = simulate(small_config(seed=18))
    assert not np.array_equal(a.positions, b.positions)


def test_nbbm_mode_always_kills_rank_one():
    res = simulate(small_config(psi=LEFTMOST_KILL))
    assert res.events.count > 0
    assert np.all(res.events.j == 1)


def test_kill_rank_marginal_matches_psi():
    # >= 1e5 logged events at N=10; chi-square against the exact rank law
    cfg = EngineConfig(
        n=10,
        psi=preset("fisher"),
        rate=RATE1,
        T=12_000.0,
        init=InitialCondition.gaussian(),
        seed=23,
        snapshot_times=[12_000.0],
    )
    res = simulate(cfg)
    assert res.events.count >= 100_000
    observed = np.bincount(res.events.j, minlength=11)[1:]
    expected = rank_kill_probs(preset("fisher"), 10) * res.events.count
    _, pvalue = stats.chisquare(observed, expected)
    assert pvalue > 0.001


def test_hydro_snapshot_tracks_pde():
    # fisher, N=1000, uniform[-1,0] start: ensemble-mean KS distance to the
    # PDE profile at t=1 stays under 0.06 (about 2x the sampling noise floor)
    g = g_from_psi(preset("fisher"))

    def ramp(x):
        return np.clip(-x, 0.0, 1.0)

    pde = solve(
        PdeConfig(
            g=g,
            rate=RATE1,
            domain=(-9.0, 9.0),
            dx=0.01,
            T=1.0,
            init=ramp,
            snapshot_times=[1.0],
        )
    )
    dists = []
    for seed in range(20):
        cfg = EngineConfig(
            n=1000,
            psi=preset("fisher"),
            rate=RATE1,
            T=1.0,
            init=InitialCondition.uniform(-1.0, 0.0),
            seed=np.random.SeedSequence(404, spawn_key=(seed,)),
            snapshot_times=[1.0],
        )
        xs = np.sort(simulate(cfg).positions[-1])
        n = xs.size
        u = np.interp(xs, pde.grid, pde.u[-1])
        left = (n - np.arange(n)) / n
        right = (n - 1.0 - np.arange(n)) / n
        dists.append(np.max(np.maximum(np.abs(u - left), np.abs(u - right))))
    assert np.mean(dists) < 0.06


# ------------------------------------------------------------- couplings


def nbbm_like_psi(n):
    # all kill mass on rank 1: psi = n on [0, 1/n], zero above
    return SelectionPsi([(0.0, 1.0 / n, [float(n)]), (1.0 / n, 1.0, [0.0])])


def test_upper_coupling_dominates_at_every_event():
    for seed in (0, 1, 2):
        cfg = EngineConfig(
            n=50,
            psi=preset("split-cloud"),
            rate=RATE1,
            T=5.0,
            init=InitialCondition.gaussian(),
            seed=seed,
            snapshot_times=[5.0],
        )
        res = simulate_coupled_upper(cfg)
        assert res.violations == 0
        assert np.all(res.x <= res.x_plus)


def test_upper_coupling_collapses_in_nbbm_limit():
    cfg = EngineConfig(
        n=50,
        psi=nbbm_like_psi(50),
        rate=RATE1,
        T=5.0,
        init=InitialCondition.gaussian(),
        seed=5,
        snapshot_times=[5.0],
    )
    res = simulate_coupled_upper(cfg)
    assert np.array_equal(res.x, res.x_plus)


def test_lower_coupling_dominated_by_rightmost_block():
    cfg = EngineConfig(
        n=100,
        psi=preset("split-cloud"),
        rate=RATE1,
        T=5.0,
        init=InitialCondition.gaussian(),
        seed=7,
        snapshot_times=[5.0],
    )
    res = simulate_coupled_lower(cfg, 0.2)
    m = res.x_minus.shape[1]
    assert m == 20
    assert res.violations == 0
    assert np.all(res.x_minus <= res.x[:, 100 - m:])


def test_lower_coupling_single_particle_block():
    cfg = EngineConfig(
        n=10,
        psi=preset("split-cloud"),
        rate=RATE1,
        T=3.0,
        init=InitialCondition.gaussian(),
        seed=8,
        snapshot_times=[3.0],
    )
    res = simulate_coupled_lower(cfg, 0.1)
    assert res.x_minus.shape[1] == 1
    assert np.all(res.x_minus[:, 0] <= res.x.max(axis=1))


def test_lower_coupling_needs_vanishing_right_tail():
    cfg = EngineConfig(
        n=100,
        psi=preset("fisher"),
        rate=RATE1,
        T=1.0,
        init=InitialCondition.gaussian(),
        seed=9,
        snapshot_times=[1.0],
    )
    with pytest.raises(AssumptionViolation):
        simulate_coupled_lower(cfg, 0.2)


# ---------------------------------------------------------- coloured run


def test_coloured_blue_set_stays_inside_population():
    cfg = EngineConfig(
        n=100,
        psi=preset("split-cloud"),
        rate=RATE1,
        T=1.5,
        init=InitialCondition.gaussian(),
        seed=31,
        snapshot_times=np.linspace(0.0, 1.5, 7),
    )
    res = simulate_coloured_bbm(cfg)
    assert res.blue.shape == (7, 100)
    assert np.all(res.populations >= 100)
    for blue_row, everyone in zip(res.blue, res.all_positions):
        assert Counter(blue_row.tolist()) <= Counter(everyone.tolist())


def test_coloured_population_grows_like_branching_bbm():
    # E[pop at t] = N * exp(int_0^t r) with no deaths
    totals = []
    for k in range(100):
        cfg = EngineConfig(
            n=500,
            psi=preset("split-cloud"),
            rate=RATE1,
            T=1.0,
            init=InitialCondition.gaussian(),
            seed=np.random.SeedSequence(77, spawn_key=(k,)),
            snapshot_times=[1.0],
        )
        totals.append(simulate_coloured_bbm(cfg).populations[-1])
    totals = np.asarray(totals, dtype=float)
    stderr = totals.std(ddof=1) / np.sqrt(totals.size)
    assert abs(totals.mean() - 500.0 * np.e) < 4.0 * stderr


def test_coloured_population_cap_aborts():
    cfg = EngineConfig(
        n=50,
        psi=preset("split-cloud"),
        rate=RATE1,
        T=3.0,
        init=InitialCondition.gaussian(),
        seed=32,
        snapshot_times=[3.0],
    )
    with pytest.raises(PopulationCap):
        simulate_coloured_bbm(cfg, cap=60)


# ------------------------------------------------------ initial condition


def test_quantile_placement_is_exact():
    n = 5
    grid = (np.arange(n) + 0.5) / n
    rng = np.random.default_rng(0)
    gauss = InitialCondition.gaussian().build(n, rng)
    assert np.allclose(gauss, ndtri(grid), atol=1e-12)
    unif = InitialCondition.uniform(-1.0, 0.0).build(4, rng)
    assert np.allclose(unif, -1.0 + (np.arange(4) + 0.5) / 4, atol=1e-12)
    expo = InitialCondition.exponential_tail().build(3, rng)
    assert np.allclose(expo, -np.log(1.0 - (np.arange(3) + 0.5) / 3), atol=1e-12)


def test_point_mass_and_explicit_placement():
    rng = np.random.default_rng(0)
    pm = InitialCondition.point_mass(2.5).build(7, rng)
    assert np.all(pm == 2.5)
    xs = np.array([3.0, -1.0, 0.0])
    back = InitialCondition.explicit(xs).build(3, rng)
    assert np.array_equal(back, xs)
    with pytest.raises(ValidationError):
        InitialCondition.explicit(xs).build(4, rng)


def test_iid_flag_samples_the_density():
    n = 20_000
    a = InitialCondition.gaussian(iid=True).build(n, np.random.default_rng(6))
    b = InitialCondition.gaussian(iid=True).build(n, np.random.default_rng(6))
    assert np.array_equal(a, b)
    assert abs(a.mean()) < 0.03
    assert abs(a.var() - 1.0) < 0.05
    c = InitialCondition.gaussian(iid=True).build(n, np.random.default_rng(7))
    assert not np.array_equal(a, c)


# ------------------------------------------------------------ validation


def test_config_rejects_tiny_population():
    with pytest.raises(ValidationError):
        small_config(n=1)


def test_config_rejects_bad_horizon():
    with pytest.raises(ValidationError):
        small_config(T=0.0)


def test_config_rejects_snapshots_outside_horizon():
    with pytest.raises(ValidationError):
        small_config(snapshot_times=[0.5, 2.5])
    with pytest.raises(ValidationError):
        small_config(snapshot_times=[-0.1, 1.0])


# ------------------------------------------------------------------- csv


def test_csv_writers_round_trip(tmp_path):
    res = simulate(small_config(n=5, T=0.5, snapshot_times=[0.0, 0.5]))
    snap_path = tmp_path / "snapshot.csv"
    log_path = tmp_path / "events.csv"
    write_snapshot_csv(snap_path, res)
    write_event_log_csv(log_path, res.events)

    with open(snap_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "particle_index", "x"]
    assert len(rows) == 1 + 2 * 5
    got = np.array([float(r[2]) for r in rows[1 + 5:]])
    assert np.array_equal(got, res.positions[-1])
    assert [int(r[1]) for r in rows[1:6]] == [1, 2, 3, 4, 5]

    with open(log_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["m", "t_m", "i", "j"]
    assert len(rows) == 1 + res.events.count
    assert [int(r[0]) for r in rows[1:]] == list(range(1, res.events.count + 1))
    assert np.array_equal(np.array([float(r[1]) for r in rows[1:]]), res.events.t)
