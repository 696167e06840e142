"""Run each harness experiment at toy scale and write its CSV.

The real acceptance scales live in the test suite and the CLI defaults;
this script keeps every run to a few seconds so the whole story fits in
one sitting.  Outputs land in out/demo/.
"""

import os

import numpy as np

from rank_bbm import (
    BranchingRate,
    InitialCondition,
    SelectionPsi,
    preset,
    run_domination_check,
    run_hydro_convergence,
    run_split_cloud,
    run_velocity_sweep,
)
from rank_bbm.experiments import (
    write_domination_csv,
    write_hydro_csv,
    write_split_csv,
    write_velocity_csv,
)

out = os.path.join("out", "demo")
os.makedirs(out, exist_ok=True)
rate = BranchingRate.constant(1.0)

print("hydrodynamic convergence (KS vs the limit PDE):")
hydro = run_hydro_convergence(
    psi=preset("fisher"),
    rate=rate,
    rho=InitialCondition.uniform(-1.0, 0.0),
    n_list=[100, 400, 1600],
    t_list=[1.0],
    replicas=6,
    seed=9,
)
for row in hydro.rows:
    print(f"  n = {row.n:5d}: mean KS {row.ks:.4f} +/- {row.stderr:.4f}")
write_hydro_csv(os.path.join(out, "hydro.csv"), hydro)

print("\nfront speed vs population size (slower for smaller n):")
indicator = SelectionPsi([(0.0, 0.4, [2.5]), (0.4, 1.0, [0.0])])
sweep = run_velocity_sweep(indicator, [64, 256, 1024], horizon=15.0,
                           replicas=4, seed=9)
for row in sweep.rows:
    print(f"  n = {row.n:5d}: v_hat {row.v_hat:.4f} "
          f"(min {row.v_min:.4f}, max {row.v_max:.4f})")
print(f"  all below sqrt(2) = {np.sqrt(2):.4f}; "
      f"regression slope on 1/log(n)^2: {sweep.slope:.2f}")
write_velocity_csv(os.path.join(out, "velocity.csv"), sweep)

print("\nsplit cloud (what fraction rides right):")
split = run_split_cloud(n=800, horizon=12.0, replicas=4, seed=9)
print(f"  right fraction {split.mean_right_fraction:.4f} "
      f"+/- {split.stderr:.4f} (fixed point: 0.4249)")
write_split_csv(os.path.join(out, "split.csv"), split)

print("\ndomination by the free cloud (exact) and its growth law:")
dom = run_domination_check(psi=preset("split-cloud"), rate=rate, n=300,
                           horizon=1.0, replicas=10, seed=9)
print(f"  tail violations: {dom.violations}")
print(f"  population at t = 1: mean {dom.pop_mean[-1]:.1f}, "
      f"expected {dom.pop_expected[-1]:.1f}")
write_domination_csv(os.path.join(out, "domination.csv"), dom)

print(f"\nCSVs written under {out}/")
