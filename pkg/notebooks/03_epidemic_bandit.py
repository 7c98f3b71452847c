"""
Vaccine allocation as a bandit
==============================

Each arm is an assignment of mRNA, vector or no vaccine to the five age
groups (children, youngsters, young adults, adults, elderly), using both
vaccine types somewhere. A pull runs one stochastic epidemic and returns
1 - attack rate.

The population here is small so the script finishes in well under a minute.
"""

# %%
import numpy as np

from mtop.environments import EpidemicBandit, enumerate_strategies, scenario_config, simulate_epidemic
from mtop.evaluation import build_ground_truth, run_single

strategies = enumerate_strategies()
print(len(strategies), "strategies; first few:")
for s in strategies[:3]:
    print("  ", s.code, s.label())

# %%
config = scenario_config("Baseline", population=5000)
out = simulate_epidemic(config, strategies[0], seed=1)
print(f"one run: ARI {out.ari:.4f}, ARH {out.arh:.5f}, doses given {out.vaccinated[-1].sum()}")

# %%
# a 12-arm slice of the strategy space
subset = strategies[::15]
env = EpidemicBandit(config, subset, objective="ari", m=3)
truth = build_ground_truth(env, repetitions=20, seed=0)
order = np.argsort(-truth.means)
for k in order[:5]:
    print(f"arm {k:2d}  {subset[k].label():32s} 1-ARI {truth.means[k]:.4f}")

# %%
rec = run_single("bfts", env, budget=240, seed=3, ground_truth=truth, log_samples=False)
print("BFTS recommendation:", rec.final_recommendation, " true:", truth.j_true)
print("proportion correct:", rec.proportion_correct[-1])
print("pulls per arm:", rec.counts(len(subset)).tolist())
