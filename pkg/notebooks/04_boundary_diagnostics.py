"""
How uncertain is the decision boundary?
=======================================

Given a posterior state, draw the means twice: once for what we believe the
top-m set is, once as the Thompson sample. The probabilities that arms
ranked below the boundary by the Thompson draw are actually in the top-m
set bound the chance that the recommendation is wrong.
"""

# %%
import numpy as np

from mtop.diagnostics import check_union_bounds, estimate_boundary_probabilities
from mtop.environments import SyntheticBandit
from mtop.evaluation import run_single
from mtop.posterior import TruncatedTPosterior

env = SyntheticBandit.gaussian(np.linspace(0.4, 0.6, 10), 0.1, m=3)
rec = run_single("bfts", env, budget=500, seed=4, snapshot_every=500)
snap = rec.steps[-1]["posteriors"]
posteriors = [TruncatedTPosterior.from_snapshot(s) for s in snap]

# %%
report = estimate_boundary_probabilities(posteriors, m=3, n_mc=50_000, rng=np.random.default_rng(0))
for rho, (p, se) in enumerate(zip(report.p_rank_in_top, report.se_rank_in_top), start=1):
    print(f"rank {rho:2d}: P(in top set) = {p:.3f} +- {se:.3f}")

# %%
check = check_union_bounds(report)
print("P(wrong set)        ", round(report.p_error, 4))
print("union bound         ", round(report.union_sum, 4))
print("(K-m) P(rank m+1)   ", round(report.bound_below, 4), " heuristic holds:", report.heuristic1)
print("m P(rank m outside) ", round(report.bound_above, 4), " heuristic holds:", report.heuristic2)
print("violations:", check.violations or "none")
