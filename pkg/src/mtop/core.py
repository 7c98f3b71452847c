"""Arms, histories, recommendations and the contracts shared by environments
and exploration algorithms."""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Protocol, Sequence, runtime_checkable

import numpy as np


class InvalidArmError(IndexError):
    """Raised when an arm index is outside ``[0, K)``."""


class ConfigError(ValueError):
    """Raised for invalid configuration (budgets, parameters, scenario names)."""


def check_arm(arm: int, n_arms: int) -> int:
    a = int(arm)
    if a != arm or not 0 <= a < n_arms:
        raise InvalidArmError(f"arm {arm!r} is not in [0, {n_arms})")
    return a


def rank_arms(values: Sequence[float]) -> np.ndarray:
    """Arm indices sorted by decreasing value; ties go to the lower index."""
    return np.argsort(-np.asarray(values, dtype=float), kind="stable")


def top_m(values: Sequence[float], m: int) -> tuple[int, ...]:
    """The ``m`` arms with the largest values, as a sorted tuple."""
    return tuple(sorted(int(a) for a in rank_arms(values)[:m]))


def clip_reward(value: float) -> tuple[float, bool]:
    """Clamp to [0, 1]; also return whether clamping happened."""
    if not np.isfinite(value):
        raise ValueError(f"non-finite reward {value!r}")
    if value < 0.0:
        return 0.0, True
    if value > 1.0:
        return 1.0, True
    return float(value), False


@dataclass
class History:
    """Ordered (arm, reward) observations with per-arm pull counts."""

    n_arms: int
    arms: list[int] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    counts: np.ndarray = field(init=False)
    sums: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n_arms < 1:
            raise ConfigError("a history needs at least one arm")
        self.counts = np.zeros(self.n_arms, dtype=np.int64)
        self.sums = np.zeros(self.n_arms)
        for a, r in zip(self.arms, self.rewards):
            self.counts[check_arm(a, self.n_arms)] += 1
            self.sums[a] += r

    @classmethod
    def from_entries(cls, n_arms: int, entries: Iterable[tuple[int, float]]) -> "History":
        entries = list(entries)
        return cls(n_arms, [int(a) for a, _ in entries], [float(r) for _, r in entries])

    def append(self, arm: int, reward: float) -> "History":
        arm = check_arm(arm, self.n_arms)
        self.arms.append(arm)
        self.rewards.append(float(reward))
        self.counts[arm] += 1
        self.sums[arm] += reward
        return self

    def __len__(self) -> int:
        return len(self.arms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, History):
            return NotImplemented
        return (
            self.n_arms == other.n_arms
            and self.arms == other.arms
            and self.rewards == other.rewards
            and np.array_equal(self.counts, other.counts)
        )

    def rewards_of(self, arm: int) -> np.ndarray:
        arm = check_arm(arm, self.n_arms)
        arms = np.asarray(self.arms, dtype=np.int64)
        return np.asarray(self.rewards, dtype=float)[arms == arm]

    def empirical_means(self) -> np.ndarray:
        """Per-arm sample means; ``-inf`` for arms never pulled."""
        with np.errstate(invalid="ignore", divide="ignore"):
            means = self.sums / self.counts
        means[self.counts == 0] = -np.inf
        return means


@dataclass(frozen=True)
class Recommendation:
    arms: tuple[int, ...]
    t: int

    def __post_init__(self):
        if len(set(self.arms)) != len(self.arms):
            raise ValueError(f"duplicate arms in recommendation {self.arms}")

    @property
    def m(self) -> int:
        return len(self.arms)


@dataclass(frozen=True)
class EnvironmentDescriptor:
    n_arms: int
    m: int
    true_means: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.n_arms < 2:
            raise ConfigError("need K >= 2 arms")
        if not 1 <= self.m < self.n_arms:
            raise ConfigError(f"need 1 <= m < K, got m={self.m}, K={self.n_arms}")
        if self.true_means is not None:
            if len(self.true_means) != self.n_arms:
                raise ConfigError("true_means must have one entry per arm")
            if any(not 0.0 <= mu <= 1.0 for mu in self.true_means):
                raise ConfigError("true means must lie in [0, 1]")


@runtime_checkable
class Environment(Protocol):
    """Anything that turns an arm index into a reward in [0, 1].

    ``sample`` is a pure function of ``(arm, rng)``; ``pull`` draws from the
    environment's own generator.
    """

    n_arms: int

    def sample(self, arm: int, rng: np.random.Generator) -> float: ...

    def pull(self, arm: int) -> float: ...


@dataclass
class Step:
    """What one call to :meth:`Explorer.step` did."""

    t: int
    pulls: list[tuple[int, float]]
    recommendation: Recommendation
    info: dict[str, Any] = field(default_factory=dict)

    @property
    def pulled_arms(self) -> list[int]:
        return [a for a, _ in self.pulls]


class Explorer(abc.ABC):
    """Base class for anytime m-top exploration algorithms.

    Subclasses implement :meth:`_select` (which arms to pull this step) and
    :meth:`recommend`. ``pulls_per_step`` is how much sample budget one
    step consumes.
    """

    name: str = "explorer"
    pulls_per_step: int = 1

    def __init__(self, n_arms: int, m: int, seed=None):
        EnvironmentDescriptor(n_arms, m)
        self.n_arms = n_arms
        self.m = m
        self.rng = np.random.default_rng(seed)
        self.history = History(n_arms)
        self.t = 0
        self._recommendation = Recommendation(tuple(range(m)), 0)

    @property
    def samples_used(self) -> int:
        return len(self.history)

    def observe(self, arm: int, reward: float) -> None:
        self.history.append(arm, reward)

    @abc.abstractmethod
    def _select(self) -> tuple[list[int], dict[str, Any]]:
        """Arms to pull at step ``self.t`` plus loggable details."""

    @abc.abstractmethod
    def recommend(self) -> Recommendation:
        """Current m-top recommendation."""

    def _recommend_before_pulls(self) -> Optional[Recommendation]:
        # hook for algorithms whose recommendation is fixed before pulling
        return None

    def step(self, env: Environment) -> Step:
        self.t += 1
        arms, info = self._select()
        early = self._recommend_before_pulls()
        pulls = []
        for arm in arms:
            reward = env.pull(arm)
            self.observe(arm, reward)
            pulls.append((arm, reward))
        rec = early if early is not None else self.recommend()
        self._recommendation = rec
        return Step(self.t, pulls, rec, info)

    @property
    def recommendation(self) -> Recommendation:
        return self._recommendation

    def empirical_top_m(self) -> tuple[int, ...]:
        return top_m(self.history.empirical_means(), self.m)
