"""Finite-difference solver for U_t = 1/2 U_xx + r(t) G(U).

Oracles: the heat kernel (normal CDF) for G = 0, the closed form
exp(int r) * Phi(-x/sqrt(t)) for the pure-branching mode, and grid
refinement for everything without a closed form.
"""

import numpy as np
import pytest
from scipy.special import ndtr

from rank_bbm.errors import (
    BlowUp,
    BoundaryContamination,
    LevelNotAttained,
    StabilityViolation,
    ValidationError,
)
from rank_bbm.pde import (
    PURE_BRANCHING,
    PdeConfig,
    PdeSolution,
    estimate_spreading_speed,
    level_position,
    plateau_value,
    solve,
    step_init,
)
from rank_bbm.selection import BranchingRate, ReactionG, g_from_psi, preset

RATE1 = BranchingRate.constant(1.0)
SQRT2 = np.sqrt(2.0)


def heat_config(dx=0.02, T=1.0, domain=(-8.0, 8.0)):
    return PdeConfig(
        g=g_from_psi(preset("uniform")),
        rate=RATE1,
        domain=domain,
        dx=dx,
        T=T,
        init=step_init(0.0),
        snapshot_times=np.linspace(0.0, T, 11),
    )


# ---------------------------------------------------------------- oracles


def test_heat_kernel_oracle():
    sol = solve(heat_config(dx=0.02))
    # U(x, 1) = Phi(-x) for the tail CDF of a standard normal
    exact = ndtr(-sol.grid)
    err = np.max(np.abs(sol.u[-1] - exact))
    assert err < 2e-3


def test_heat_midpoint_symmetry():
    sol = solve(heat_config(dx=0.05, T=2.0))
    mid = np.argmin(np.abs(sol.grid))
    for row in sol.u[1:]:
        assert abs(row[mid] - 0.5) < 1e-3


def test_pure_branching_closed_form():
    cfg = PdeConfig(
        g=PURE_BRANCHING,
        rate=RATE1,
        domain=(-8.0, 8.0),
        dx=0.02,
        T=1.0,
        init=step_init(0.0),
        snapshot_times=[0.0, 1.0],
    )
    sol = solve(cfg)
    mid = np.argmin(np.abs(sol.grid))
    assert abs(sol.u[-1][mid] - np.e / 2.0) < 5e-3
    exact = np.e * ndtr(-sol.grid)
    assert np.max(np.abs(sol.u[-1] - exact)) < 5e-3


def test_pure_branching_grows_past_one():
    cfg = PdeConfig(
        g=PURE_BRANCHING,
        rate=BranchingRate.sinusoidal(1.0, 0.5),
        domain=(-8.0, 8.0),
        dx=0.05,
        T=1.0,
        init=step_init(0.0),
        snapshot_times=[1.0],
    )
    sol = solve(cfg)
    # far left the flat state grows like exp(int_0^1 r) > 1
    growth = np.exp(BranchingRate.sinusoidal(1.0, 0.5).integral(0.0, 1.0))
    assert abs(sol.u[-1][1] - growth) < 5e-3
    assert sol.u[-1].max() > 1.0


# ------------------------------------------------------ scheme invariants


def random_monotone_profile(rng, x):
    steps = rng.uniform(0.0, 1.0, size=x.size - 1)
    prof = 1.0 - np.concatenate([[0.0], np.cumsum(steps)]) / steps.sum()
    return np.clip(prof, 0.0, 1.0)


def test_comparison_principle_ordered_pairs():
    g = g_from_psi(preset("fisher"))
    rng = np.random.default_rng(7)
    x = np.arange(-2.0, 2.0 + 1e-9, 0.1)
    for _ in range(20):
        a = random_monotone_profile(rng, x)
        b = random_monotone_profile(rng, x)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        sols = []
        for prof in (lo, hi):
            cfg = PdeConfig(
                g=g,
                rate=RATE1,
                domain=(-2.0, 2.0),
                dx=0.1,
                T=0.25,
                init=prof,
                snapshot_times=[0.05, 0.15, 0.25],
                boundary_guard=False,  # random data, no front to protect
            )
            sols.append(solve(cfg))
        assert np.all(sols[0].u <= sols[1].u + 1e-12)


def test_range_and_monotonicity_preserved():
    cfg = PdeConfig(
        g=g_from_psi(preset("fisher")),
        rate=RATE1,
        domain=(-8.0, 10.0),
        dx=0.05,
        T=2.0,
        init=step_init(0.0),
        snapshot_times=np.linspace(0.0, 2.0, 21),
    )
    sol = solve(cfg)
    assert sol.u.min() >= -1e-9 and sol.u.max() <= 1.0 + 1e-9
    assert np.all(np.diff(sol.u, axis=1) <= 1e-9)


def test_grid_convergence_second_order():
    sups = []
    solutions = []
    for dx in (0.08, 0.04, 0.02):
        cfg = PdeConfig(
            g=g_from_psi(preset("fisher")),
            rate=RATE1,
            domain=(-8.0, 10.0),
            dx=dx,
            T=2.0,
            init=step_init(0.0),
            snapshot_times=[2.0],
        )
        solutions.append(solve(cfg))
    coarse, mid, fine = solutions
    d1 = np.max(np.abs(coarse.u[-1] - mid.u[-1][::2]))
    d2 = np.max(np.abs(mid.u[-1] - fine.u[-1][::2]))
    assert 3.5 < d1 / d2 < 4.5


def test_semi_implicit_agrees_with_explicit():
    kw = dict(
        g=g_from_psi(preset("fisher")),
        rate=RATE1,
        domain=(-8.0, 10.0),
        dx=0.05,
        T=1.0,
        init=step_init(0.0),
        snapshot_times=[1.0],
    )
    explicit = solve(PdeConfig(**kw))
    cn = solve(PdeConfig(**kw, scheme="semi-implicit", dt=0.001))
    assert np.max(np.abs(explicit.u[-1] - cn.u[-1])) < 5e-3


# ----------------------------------------------------------------- guards


def test_oversized_step_rejected():
    cfg = heat_config(dx=0.1)
    cfg.dt = 0.02  # > 0.9 * dx^2 = 0.009
    with pytest.raises(StabilityViolation):
        solve(cfg)


def test_lipschitz_bound_on_step():
    # coarse grid admits dt = 0.9 but dt * Lip(G) <= 0.5 must still bind
    cfg = PdeConfig(
        g=g_from_psi(preset("fisher")),
        rate=RATE1,
        domain=(-5.0, 5.0),
        dx=1.0,
        T=3.0,
        init=step_init(0.0),
        dt=0.8,
        snapshot_times=[3.0],
    )
    with pytest.raises(StabilityViolation):
        solve(cfg)


def test_blowup_detected_for_non_density_reaction():
    # G = 5u is not the reaction of any density; solution grows like e^{5t}
    cfg = PdeConfig(
        g=ReactionG.from_coeffs([0.0, 5.0]),
        rate=RATE1,
        domain=(-6.0, 6.0),
        dx=0.1,
        T=2.0,
        init=step_init(0.0),
        snapshot_times=[2.0],
    )
    with pytest.raises(BlowUp):
        solve(cfg)


def test_front_near_boundary_aborts():
    cfg = PdeConfig(
        g=g_from_psi(preset("fisher")),
        rate=RATE1,
        domain=(-4.0, 4.0),
        dx=0.05,
        T=6.0,
        init=step_init(0.0),
        snapshot_times=np.linspace(0.0, 6.0, 61),
    )
    with pytest.raises(BoundaryContamination):
        solve(cfg)


def test_non_monotone_init_rejected():
    cfg = heat_config(dx=0.1)
    x = cfg.grid_preview()
    cfg.init = np.abs(np.sin(x))
    with pytest.raises(ValidationError):
        solve(cfg)


# ---------------------------------------------------------- level queries


def make_solution(x, rows, times):
    return PdeSolution(times=np.asarray(times, float), grid=x, u=np.asarray(rows, float))


def test_level_position_grid_aligned_step():
    x = np.arange(0.0, 6.0 + 1e-9, 0.1)
    row = np.where(x <= 3.2, 1.0, 0.0)
    sol = make_solution(x, [row], [0.0])
    pos = level_position(sol, 0.0, 0.5)
    assert abs(pos - 3.2) <= 0.1


def test_level_position_unattained():
    x = np.arange(0.0, 1.0 + 1e-9, 0.1)
    sol = make_solution(x, [np.full_like(x, 0.3)], [0.0])
    with pytest.raises(LevelNotAttained):
        level_position(sol, 0.0, 0.5)


def test_level_position_takes_rightmost_crossing():
    x = np.arange(0.0, 0.5 + 1e-9, 0.1)
    row = [1.0, 0.5, 0.7, 0.5, 0.2, 0.0]
    sol = make_solution(x, [row], [0.0])
    pos = level_position(sol, 0.0, 0.6)
    assert 0.2 < pos < 0.3


def test_spreading_speed_pure_diffusion_is_flat():
    sol = solve(heat_config(dx=0.05, T=4.0, domain=(-10.0, 10.0)))
    fit = estimate_spreading_speed(sol, 0.5, (0.0, 4.0))
    assert abs(fit.speed) < 0.05


def test_spreading_speed_needs_enough_samples():
    sol = solve(heat_config(dx=0.05, T=1.0))
    with pytest.raises(ValidationError):
        estimate_spreading_speed(sol, 0.5, (0.9, 1.0))


# ------------------------------------------------------------- split cloud


@pytest.fixture(scope="module")
def split_cloud_solution():
    cfg = PdeConfig(
        g=g_from_psi(preset("split-cloud")),
        rate=RATE1,
        domain=(-60.0, 60.0),
        dx=0.05,
        T=30.0,
        init=step_init(0.0),
        snapshot_times=np.linspace(0.0, 30.0, 61),
    )
    return solve(cfg)


ALPHA = 0.4248730866187


def test_split_cloud_plateau(split_cloud_solution):
    est = plateau_value(split_cloud_solution, 30.0)
    assert abs(est.value - ALPHA) < 0.02
    assert est.high - est.low < 0.01
    assert abs(0.5 * (est.low + est.high) - ALPHA) < 0.02


def test_split_cloud_two_front_levels(split_cloud_solution):
    sol = split_cloud_solution
    fit = estimate_spreading_speed(sol, 0.2, (15.0, 30.0))
    assert 1.2 < fit.speed < 1.45  # approaches sqrt(2) from below
    # above the plateau value only the receding left front crosses the level
    pos = level_position(sol, 30.0, 0.6)
    assert pos < -5.0


def test_fisher_plateau_is_one():
    cfg = PdeConfig(
        g=g_from_psi(preset("fisher")),
        rate=RATE1,
        domain=(-10.0, 25.0),
        dx=0.05,
        T=8.0,
        init=step_init(0.0),
        snapshot_times=[8.0],
    )
    est = plateau_value(solve(cfg), 8.0)
    assert est.high > 0.98
