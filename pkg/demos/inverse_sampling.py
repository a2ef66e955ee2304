"""Recover a random background flow from nine noisy point observations.

A velocity field with |k| <= 2 (12 real coefficients) is drawn from the
prior. The scalar it transports is observed at nine points, noise is added,
and pCN explores the posterior with the particle forward map inside the
likelihood. The script reports how many true coefficients fall inside the
central 95% posterior intervals.

    python3 demos/inverse_sampling.py [--steps N]

The default 20000 steps take about half a minute; the acceptance run uses
200000.
"""

import argparse
import time
from pathlib import Path

import numpy as np

from sparseobs import load_config, run_chain
from sparseobs.cli import build_likelihood

ap = argparse.ArgumentParser()
ap.add_argument("--steps", type=int, default=20_000)
args = ap.parse_args()

cfg = load_config(Path(__file__).parent / "configs" / "inverse_k2.yaml")
lk, truth = build_likelihood(cfg)
print("data:", np.round(lk.data, 3))

t0 = time.perf_counter()
burn = args.steps // 10
res = run_chain(args.steps, cfg.chain.beta, lk.prior, lk, seed=cfg.seed, burn_in=burn)
print(f"{args.steps} steps in {time.perf_counter() - t0:.0f} s, acceptance {res.acceptance_rate:.2f}")

lo, hi = np.quantile(res.samples, [0.025, 0.975], axis=0)
print("\n  coef    truth    2.5%    97.5%   prior sd")
for i, (u, a, b, s) in enumerate(zip(truth, lo, hi, lk.prior.std)):
    mark = "" if a <= u <= b else "  <- outside"
    print(f"  u{i:<4} {u:+.3f}  {a:+.3f}  {b:+.3f}   {s:.3f}{mark}")
inside = np.mean((truth >= lo) & (truth <= hi))
print(f"\ncoverage {inside:.0%}; MAP objective {res.map_objective:.2f} "
      f"vs {lk(truth) + 0.5 * lk.prior.norm2(truth):.2f} at the truth")
