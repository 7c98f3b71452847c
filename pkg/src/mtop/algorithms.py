"""Anytime m-top exploration: Boundary Focused Thompson Sampling, AT-LUCB and
uniform (least-sampled) allocation."""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from .core import ConfigError, Explorer, Recommendation, rank_arms, top_m
from .posterior import TruncatedTPosterior, sample_posteriors


class BFTS(Explorer):
    """Boundary Focused Thompson Sampling with truncated-t posteriors.

    Every arm is pulled twice (round-robin) before the posteriors are proper.
    After that, each step draws one mean per arm from the posteriors, ranks
    the draws and pulls the arm ranked ``m`` or ``m + 1`` with equal
    probability. Recommendations are the ``m`` largest truncated posterior
    means.
    """

    name = "bfts"
    pulls_per_step = 1
    warmup_rounds = 2

    def __init__(self, n_arms: int, m: int, seed=None):
        super().__init__(n_arms, m, seed)
        self.posteriors = [TruncatedTPosterior() for _ in range(n_arms)]
        self._means = np.full(n_arms, np.nan)

    @classmethod
    def min_budget(cls, n_arms: int) -> int:
        return cls.warmup_rounds * n_arms

    @property
    def in_warmup(self) -> bool:
        return self.samples_used < self.warmup_rounds * self.n_arms

    def observe(self, arm, reward):
        super().observe(arm, reward)
        post = self.posteriors[arm].update(reward)
        self.posteriors[arm] = post
        if post.is_proper:
            self._means[arm] = post.truncated_mean()

    def select(self) -> tuple[int, dict[str, Any]]:
        if self.in_warmup:
            return self.samples_used % self.n_arms, {"phase": "warmup"}
        theta = sample_posteriors(self.posteriors, self.rng)
        coin = int(self.rng.random() < 0.5)
        order = rank_arms(theta)
        arm = int(order[self.m - 1 + coin])
        return arm, {"phase": "boundary", "sampled_means": theta.tolist(), "coin": coin}

    def _select(self):
        arm, info = self.select()
        return [arm], info

    def posterior_means(self) -> np.ndarray:
        return self._means.copy()

    def recommend(self) -> Recommendation:
        if np.isnan(self._means).any():
            return Recommendation(self.empirical_top_m(), self.t)
        return Recommendation(top_m(self._means, self.m), self.t)

    def snapshots(self) -> list[dict]:
        return [p.snapshot(a) for a, p in enumerate(self.posteriors)]


def confidence_radius(n, t, delta=None, n_arms=2, log_delta=None):
    """``sqrt(ln(5/4 * K * t^4 / delta) / (2 n))``; infinite when ``n == 0``.

    ``log_delta`` may be given instead of ``delta`` to avoid underflow for
    very late stages.
    """
    if log_delta is None:
        log_delta = math.log(delta)
    log_term = math.log(1.25 * n_arms) + 4.0 * math.log(t) - log_delta
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.sqrt(log_term / (2.0 * n))
    return out if out.ndim else float(out)


class ATLUCB(Explorer):
    """Anytime LUCB with geometrically shrinking confidence ``delta_s = delta1 * alpha**(s-1)``.

    Two arms are pulled per step: the top-m arm with the smallest lower bound
    and the non-top-m arm with the largest upper bound.
    """

    name = "atlucb"
    pulls_per_step = 2

    def __init__(self, n_arms: int, m: int, seed=None, delta1: float = 0.5,
                 alpha: float = 0.99, epsilon: float = 0.0):
        super().__init__(n_arms, m, seed)
        if not 0.0 < delta1 < 1.0:
            raise ConfigError(f"delta1 must lie in (0, 1), got {delta1}")
        if not 1 / 50 <= alpha < 1.0:
            raise ConfigError(f"alpha must lie in [1/50, 1), got {alpha}")
        if epsilon < 0:
            raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
        self.delta1 = delta1
        self.alpha = alpha
        self.epsilon = epsilon
        self.stage = 1
        self.counts = np.zeros(n_arms, dtype=np.int64)
        self.sums = np.zeros(n_arms)
        self.J = tuple(range(m))
        self._init_cursor = 0

    @classmethod
    def min_budget(cls, n_arms: int) -> int:
        return 2 * math.ceil(n_arms / 2)

    def log_delta(self, stage: int) -> float:
        return math.log(self.delta1) + (stage - 1) * math.log(self.alpha)

    def delta(self, stage: int) -> float:
        return math.exp(self.log_delta(stage))

    def observe(self, arm, reward):
        super().observe(arm, reward)
        self.counts[arm] += 1
        self.sums[arm] += reward

    def empirical_means(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            means = self.sums / self.counts
        means[self.counts == 0] = -np.inf
        return means

    def bounds(self, arm: int, stage: int, t: int) -> tuple[float, float]:
        """(L, U) for ``arm`` at confidence ``delta_stage`` and time ``t``."""
        n = self.counts[arm]
        if n == 0:
            return -math.inf, math.inf
        mu = self.sums[arm] / n
        b = confidence_radius(n, t, n_arms=self.n_arms, log_delta=self.log_delta(stage))
        return mu - b, mu + b

    def _pair(self, high: tuple[int, ...], stage: int, t: int) -> tuple[int, int, float]:
        means = self.empirical_means()
        radius = confidence_radius(self.counts, t, n_arms=self.n_arms, log_delta=self.log_delta(stage))
        lower = means - radius
        upper = means + radius
        in_high = np.zeros(self.n_arms, dtype=bool)
        in_high[list(high)] = True
        high_idx = np.flatnonzero(in_high)
        rest_idx = np.flatnonzero(~in_high)
        # argmin/argmax return the first hit, i.e. the lowest arm index on ties
        h = int(high_idx[np.argmin(lower[high_idx])])
        l = int(rest_idx[np.argmax(upper[rest_idx])])
        return h, l, float(upper[l] - lower[h])

    def select_pair(self, t: int) -> tuple[int, int]:
        """(h*, l*) at the current stage using the empirical top-m as ``High``."""
        h, l, _ = self._pair(top_m(self.empirical_means(), self.m), self.stage, t)
        return h, l

    def terminated(self, high, stage: int, t: int) -> bool:
        return self._pair(high, stage, t)[2] < self.epsilon

    def _next_stage(self, high, t: int) -> int:
        """First stage after the current one at which the gap condition fails.

        The gap ``U_l - L_h`` only grows as delta shrinks, so the condition is
        monotone in the stage and a doubling + bisection search finds the
        boundary.
        """
        lo = self.stage  # condition holds here
        step = 1
        hi = lo + step
        while self.terminated(high, hi, t):
            lo = hi
            step *= 2
            hi = lo + step
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.terminated(high, mid, t):
                lo = mid
            else:
                hi = mid
        return hi

    def advance(self, t: int) -> bool:
        """Stage/recommendation update at the start of step ``t``; True if the stage moved."""
        high = top_m(self.empirical_means(), self.m)
        if self.terminated(high, self.stage, t):
            self.stage = self._next_stage(high, t)
            self.J = high
            return True
        if self.stage == 1:
            self.J = high
        return False

    def _select(self):
        t = self.t
        if (self.counts == 0).any():
            arms = [(self._init_cursor + i) % self.n_arms for i in range(2)]
            self._init_cursor += 2
            self.J = top_m(self.empirical_means(), self.m)
            return arms, {"phase": "init", "stage": self.stage}
        advanced = self.advance(t)
        h, l = self.select_pair(t)
        return [h, l], {
            "phase": "lucb",
            "stage": self.stage,
            "delta": self.delta(self.stage),
            "advanced": advanced,
        }

    def _recommend_before_pulls(self):
        return Recommendation(self.J, self.t)

    def recommend(self) -> Recommendation:
        return Recommendation(self.J, self.t)


class Uniform(Explorer):
    """Pull the least-sampled arm (lowest index on ties); recommend the empirical top-m."""

    name = "uniform"
    pulls_per_step = 1

    @classmethod
    def min_budget(cls, n_arms: int) -> int:
        return 1

    def select(self) -> int:
        return int(np.argmin(self.history.counts))

    def _select(self):
        return [self.select()], {}

    def recommend(self) -> Recommendation:
        return Recommendation(self.empirical_top_m(), self.t)


ALGORITHMS = {cls.name: cls for cls in (BFTS, ATLUCB, Uniform)}


def make_explorer(name: str, n_arms: int, m: int, seed=None, **params) -> Explorer:
    try:
        cls = ALGORITHMS[name]
    except KeyError:
        raise ConfigError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None
    return cls(n_arms, m, seed=seed, **params)
