"""Synthetic Gaussian (optionally bimodal) bandits with known means."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from ..core import EnvironmentDescriptor, check_arm, clip_reward


@dataclass(frozen=True)
class SyntheticArmSpec:
    """A Gaussian arm, or a two-component Gaussian mixture.

    ``weight`` is the probability of the first mode.
    """

    mean: float
    sd: float = 0.0
    mean2: Optional[float] = None
    sd2: float = 0.0
    weight: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.mean <= 1.0:
            raise ValueError(f"mean {self.mean} outside [0, 1]")
        if self.sd < 0 or self.sd2 < 0:
            raise ValueError("standard deviations must be >= 0")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"mixture weight {self.weight} outside [0, 1]")
        if self.mean2 is not None and not 0.0 <= self.mean2 <= 1.0:
            raise ValueError(f"second mean {self.mean2} outside [0, 1]")

    @property
    def bimodal(self) -> bool:
        return self.mean2 is not None and self.weight < 1.0

    @property
    def nominal_mean(self) -> float:
        if not self.bimodal:
            return self.mean
        return self.weight * self.mean + (1 - self.weight) * self.mean2

    def clamped_mean(self) -> float:
        """Mean of the reward after clamping to [0, 1]."""
        modes = [(self.weight, self.mean, self.sd)]
        if self.bimodal:
            modes.append((1 - self.weight, self.mean2, self.sd2))
        return float(sum(w * _clipped_normal_mean(mu, sd) for w, mu, sd in modes if w > 0))

    @property
    def clamp_bias(self) -> float:
        return self.clamped_mean() - self.nominal_mean


def _clipped_normal_mean(mu: float, sd: float) -> float:
    if sd == 0:
        return min(max(mu, 0.0), 1.0)
    a, b = (0.0 - mu) / sd, (1.0 - mu) / sd
    inside = mu * (stats.norm.cdf(b) - stats.norm.cdf(a)) + sd * (stats.norm.pdf(a) - stats.norm.pdf(b))
    return float(inside + stats.norm.sf(b))


def synthetic_pull(spec: SyntheticArmSpec, rng: np.random.Generator) -> tuple[float, bool]:
    """One clamped draw and whether it was clamped."""
    if spec.bimodal and rng.random() >= spec.weight:
        value = rng.normal(spec.mean2, spec.sd2)
    else:
        value = rng.normal(spec.mean, spec.sd)
    return clip_reward(value)


class SyntheticBandit:
    """Arms with known reward distributions; rewards are clamped to [0, 1] and clamps are counted."""

    def __init__(self, arms: Sequence[SyntheticArmSpec], m: int = 1, seed=None):
        self.arms = list(arms)
        self.n_arms = len(self.arms)
        self.descriptor = EnvironmentDescriptor(
            self.n_arms, m, tuple(a.nominal_mean for a in self.arms)
        )
        self.rng = np.random.default_rng(seed)
        self.n_pulls = 0
        self.n_clamped = 0

    @classmethod
    def gaussian(cls, means: Sequence[float], sd: float, m: int = 1, seed=None) -> "SyntheticBandit":
        return cls([SyntheticArmSpec(float(mu), sd) for mu in means], m=m, seed=seed)

    @property
    def m(self) -> int:
        return self.descriptor.m

    @property
    def true_means(self) -> np.ndarray:
        return np.asarray(self.descriptor.true_means)

    def sample(self, arm: int, rng: np.random.Generator) -> float:
        spec = self.arms[check_arm(arm, self.n_arms)]
        value, clamped = synthetic_pull(spec, rng)
        self.n_pulls += 1
        self.n_clamped += clamped
        return value

    def pull(self, arm: int) -> float:
        return self.sample(arm, self.rng)

    def reseed(self, seed) -> None:
        self.rng = np.random.default_rng(seed)

    def describe(self) -> dict:
        return {
            "kind": "synthetic",
            "m": self.m,
            "arms": [
                {k: getattr(a, k) for k in ("mean", "sd", "mean2", "sd2", "weight")} for a in self.arms
            ],
        }
