"""Rank-based branching-selection particle systems and their PDE limits."""

from .experiments import (
    run_domination_check,
    run_hydro_convergence,
    run_split_cloud,
    run_velocity_sweep,
)
from .engine import (
    EngineConfig,
    InitialCondition,
    simulate,
    simulate_coloured_bbm,
    simulate_coupled_lower,
    simulate_coupled_upper,
)
from .pde import (
    PURE_BRANCHING,
    PdeConfig,
    estimate_spreading_speed,
    level_position,
    plateau_value,
    solve,
    step_init,
)
from .selection import (
    LEFTMOST_KILL,
    BranchingRate,
    LeftmostKill,
    ReactionG,
    SelectionPsi,
    alpha_fixed_point,
    g_from_psi,
    preset,
    psi_from_g,
    rank_kill_probs,
)
from .waves import classify, shoot_profile

__version__ = "0.1.0"

__all__ = [
    "EngineConfig",
    "InitialCondition",
    "LEFTMOST_KILL",
    "BranchingRate",
    "LeftmostKill",
    "PURE_BRANCHING",
    "PdeConfig",
    "ReactionG",
    "SelectionPsi",
    "alpha_fixed_point",
    "classify",
    "estimate_spreading_speed",
    "g_from_psi",
    "level_position",
    "plateau_value",
    "preset",
    "psi_from_g",
    "rank_kill_probs",
    "run_domination_check",
    "run_hydro_convergence",
    "run_split_cloud",
    "run_velocity_sweep",
    "shoot_profile",
    "simulate",
    "simulate_coloured_bbm",
    "simulate_coupled_lower",
    "simulate_coupled_upper",
    "solve",
    "step_init",
    "__version__",
]
