"""
The truncated Student-t posterior
=================================

Each arm's belief about its mean is a Student-t with location equal to the
sample mean, squared scale equal to the sum of squared deviations over n^2,
and n degrees of freedom. It is cut to [0, 1], the range rewards live in.
"""

# %%
import numpy as np

from mtop.posterior import TruncatedTPosterior, truncated_t_mean

post = TruncatedTPosterior.from_rewards([0.2, 0.4])
print("mu0 =", post.mu0, " sigma0^2 =", post.sigma0_sq, " nu =", post.nu)

# the truncated mean sits slightly above 0.3 because more mass is cut below 0
print("truncated mean:", post.truncated_mean())

# %%
# inverse-CDF sampling stays inside [0, 1] even for extreme parameters
rng = np.random.default_rng(1)
draws = post.sample(rng, 200_000)
print("sample mean %.5f  (analytic %.5f)" % (draws.mean(), post.truncated_mean()))

# %%
# more data: the posterior tightens around the true mean
rewards = np.clip(rng.normal(0.62, 0.1, 5000), 0, 1)
for n in (2, 10, 100, 1000, 5000):
    p = TruncatedTPosterior.from_rewards(rewards[:n])
    print(f"n={n:5d}  truncated mean {p.truncated_mean():.4f}  scale {np.sqrt(p.sigma0_sq):.4f}")

# %%
# location near the upper edge: the cut above pulls the mean down
for mu in (0.5, 0.8, 0.9, 0.99):
    print(mu, round(truncated_t_mean(mu, 0.5, 3), 4))
