"""Wall time of the particle forward map and of the Galerkin reference as the
velocity dimension grows through the |k| <= 8, 16, 32 tiers.

The particle cost is linear in the number of velocity modes, since each step
evaluates the field at one point. The dense reference pays for an N x N
operator instead.

    python3 demos/scaling.py [--repetitions R]
"""

import argparse

from sparseobs import CostModel, benchmark_scaling, predict_cost_ratio

ap = argparse.ArgumentParser()
ap.add_argument("--repetitions", type=int, default=5)
args = ap.parse_args()

table = benchmark_scaling([197, 797, 3209], repetitions=args.repetitions)
print("  N_u    K   particle s   reference s   measured ratio   N_u/N_b^2 trend")
for r in table.rows:
    model = predict_cost_ratio(CostModel(4, 2000, 10, r.n_u, r.n_u))
    flag = "  (jittery)" if r.flagged else ""
    print(f"{r.n_u:>5}  {r.max_wavenumber:>3}   {r.particle_time:>9.4f}   {r.reference_time:>10.4f}"
          f"   {r.particle_time / r.reference_time:>13.3g}   {model:>14.3g}{flag}")
print(f"\nlog-log slopes: particle {table.particle_slope:.2f}, reference {table.reference_slope:.2f}")
