"""Ground truth, m-top metrics and the budgeted experiment runner."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .algorithms import ALGORITHMS, make_explorer
from .core import ConfigError, Recommendation, top_m
from .environments.config import stable_hash

log = logging.getLogger(__name__)


def run_seed_sequence(seed: int, *keys: int) -> np.random.SeedSequence:
    """Child seed for ``keys`` under ``seed``; the same keys always give the same stream."""
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))


# -- ground truth --------------------------------------------------------------

@dataclass
class GroundTruth:
    samples: np.ndarray  # (K, R)
    m: int
    env_hash: str = ""
    seed: Optional[int] = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[1] < 2:
            raise ConfigError("ground truth needs a (K, R) sample array with R >= 2")
        if not 1 <= self.m < self.n_arms:
            raise ConfigError(f"need 1 <= m < K, got m={self.m}")

    @property
    def n_arms(self) -> int:
        return self.samples.shape[0]

    @property
    def repetitions(self) -> int:
        return self.samples.shape[1]

    @property
    def means(self) -> np.ndarray:
        return self.samples.mean(axis=1)

    @property
    def j_true(self) -> tuple[int, ...]:
        return top_m(self.means, self.m)

    def to_dict(self) -> dict:
        return {
            "env_hash": self.env_hash,
            "seed": self.seed,
            "R": self.repetitions,
            "m": self.m,
            "samples": self.samples.tolist(),
            "means": self.means.tolist(),
            "j_true": list(self.j_true),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        gt = cls(np.asarray(d["samples"], float), int(d["m"]), d.get("env_hash", ""), d.get("seed"))
        if "j_true" in d and list(gt.j_true) != list(d["j_true"]):
            raise ValueError("stored j_true does not match the stored samples")
        return gt

    def save(self, path, extra: Optional[dict] = None) -> None:
        payload = self.to_dict()
        if extra:
            payload.update(extra)
        Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "GroundTruth":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _arm_samples(env, arm: int, repetitions: int, seed: int) -> list[float]:
    rng = np.random.default_rng(run_seed_sequence(seed, arm))
    return [env.sample(arm, rng) for _ in range(repetitions)]


def build_ground_truth(env, repetitions: int, seed: int, m: Optional[int] = None,
                       parallel: int = 1) -> GroundTruth:
    """Pull every arm ``repetitions`` times, each arm from its own seed stream."""
    if repetitions < 2:
        raise ConfigError("ground truth needs at least 2 repetitions per arm")
    m = env.m if m is None else m
    arms = range(env.n_arms)
    if parallel > 1:
        with ProcessPoolExecutor(parallel) as pool:
            futures = [pool.submit(_arm_samples, env, a, repetitions, seed) for a in arms]
            samples = [f.result() for f in futures]
    else:
        samples = [_arm_samples(env, a, repetitions, seed) for a in arms]
    env_hash = stable_hash(env.describe()) if hasattr(env, "describe") else ""
    return GroundTruth(np.asarray(samples), m, env_hash, seed)


# -- metrics -------------------------------------------------------------------

def _arms(rec) -> tuple[int, ...]:
    return tuple(rec.arms) if isinstance(rec, Recommendation) else tuple(rec)


def _check(arms, gt: GroundTruth):
    for a in arms:
        if not 0 <= a < gt.n_arms:
            raise KeyError(f"arm {a} is not in the ground truth (K={gt.n_arms})")


def sum_of_means(rec, gt: GroundTruth) -> float:
    arms = _arms(rec)
    _check(arms, gt)
    means = gt.means
    return float(sum(means[a] for a in arms))


def proportion_correct(rec, gt: GroundTruth) -> float:
    arms = _arms(rec)
    _check(arms, gt)
    return len(set(arms) & set(gt.j_true)) / gt.m


# -- experiments ---------------------------------------------------------------

@dataclass
class ExperimentRecord:
    """One run: per-sample trace plus per-step log."""

    algorithm: str
    seed: int
    run: int
    budget: int
    config_hash: str
    arms: list[int] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    recommendations: list[tuple[int, ...]] = field(default_factory=list)
    sum_of_means: Optional[list[float]] = None
    proportion_correct: Optional[list[float]] = None
    steps: list[dict] = field(default_factory=list)
    n_clamped: int = 0

    @property
    def samples_used(self) -> int:
        return len(self.arms)

    @property
    def leftover(self) -> int:
        return self.budget - self.samples_used

    @property
    def final_recommendation(self) -> tuple[int, ...]:
        return self.recommendations[-1]

    def counts(self, n_arms: int) -> np.ndarray:
        return np.bincount(self.arms, minlength=n_arms)

    def header(self) -> dict:
        return {
            "type": "header",
            "algorithm": self.algorithm,
            "seed": self.seed,
            "run": self.run,
            "budget": self.budget,
            "samples_used": self.samples_used,
            "leftover": self.leftover,
            "n_clamped": self.n_clamped,
            "config_hash": self.config_hash,
        }

    def sample_lines(self) -> Iterable[dict]:
        for i, (a, r, rec) in enumerate(zip(self.arms, self.rewards, self.recommendations)):
            line = {"sample": i + 1, "arm": a, "reward": r, "recommendation": list(rec)}
            if self.proportion_correct is not None:
                line["sum_of_means"] = self.sum_of_means[i]
                line["proportion_correct"] = self.proportion_correct[i]
            yield line

    def write_ndjson(self, path, config: Optional[dict] = None) -> None:
        header = self.header()
        if config is not None:
            header["config"] = config
        with open(path, "w") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for line in self.sample_lines():
                fh.write(json.dumps(line, sort_keys=True) + "\n")

    def write_steps(self, path, config: Optional[dict] = None) -> None:
        header = self.header()
        if config is not None:
            header["config"] = config
        with open(path, "w") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for step in self.steps:
                fh.write(json.dumps(step, sort_keys=True) + "\n")

    @classmethod
    def read_ndjson(cls, path) -> "ExperimentRecord":
        with open(path) as fh:
            header = json.loads(fh.readline())
            lines = [json.loads(x) for x in fh if x.strip()]
        rec = cls(header["algorithm"], header["seed"], header["run"], header["budget"],
                  header["config_hash"], n_clamped=header.get("n_clamped", 0))
        for line in lines:
            rec.arms.append(line["arm"])
            rec.rewards.append(line["reward"])
            rec.recommendations.append(tuple(line["recommendation"]))
        if lines and "proportion_correct" in lines[0]:
            rec.sum_of_means = [x["sum_of_means"] for x in lines]
            rec.proportion_correct = [x["proportion_correct"] for x in lines]
        return rec

    def recompute_metrics(self, gt: GroundTruth) -> None:
        self.sum_of_means = [sum_of_means(r, gt) for r in self.recommendations]
        self.proportion_correct = [proportion_correct(r, gt) for r in self.recommendations]


def check_budget(algorithm: str, n_arms: int, budget: int) -> None:
    try:
        cls = ALGORITHMS[algorithm]
    except KeyError:
        raise ConfigError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}") from None
    need = cls.min_budget(n_arms)
    if budget < need:
        raise ConfigError(f"{algorithm} needs a budget of at least {need} samples for K={n_arms}, got {budget}")


def run_single(algorithm: str, env, budget: int, seed: int, run: int = 0, m: Optional[int] = None,
               ground_truth: Optional[GroundTruth] = None, params: Optional[dict] = None,
               snapshot_every: Optional[int] = None, log_samples: bool = True,
               config_hash: str = "") -> ExperimentRecord:
    """Run one algorithm until the next step would exceed ``budget`` samples.

    The run's seed stream is split into independent children for the
    algorithm and the environment, so extra diagnostics never shift either.
    Between the pulls of a multi-pull step the previous recommendation is
    carried in the per-sample trace.
    """
    m = env.m if m is None else m
    check_budget(algorithm, env.n_arms, budget)
    algo_seed, env_seed = run_seed_sequence(seed, run).spawn(2)
    explorer = make_explorer(algorithm, env.n_arms, m, seed=algo_seed, **(params or {}))
    env.reseed(env_seed)
    clamped_before = getattr(env, "n_clamped", 0)

    record = ExperimentRecord(algorithm, seed, run, budget, config_hash)
    previous = explorer.recommendation.arms
    while explorer.samples_used + explorer.pulls_per_step <= budget:
        step = explorer.step(env)
        current = step.recommendation.arms
        for i, (arm, reward) in enumerate(step.pulls):
            record.arms.append(arm)
            record.rewards.append(reward)
            record.recommendations.append(current if i == len(step.pulls) - 1 else previous)
        previous = current
        entry = {
            "t": step.t,
            "samples_used": explorer.samples_used,
            "algorithm": algorithm,
            "pulled_arms": step.pulled_arms,
            "recommendation": list(current),
        }
        if log_samples:
            entry.update({k: v for k, v in step.info.items()})
        if snapshot_every and hasattr(explorer, "snapshots"):
            last = explorer.samples_used + explorer.pulls_per_step > budget
            if step.t % snapshot_every == 0 or last:
                entry["posteriors"] = explorer.snapshots()
        record.steps.append(entry)
    record.n_clamped = getattr(env, "n_clamped", 0) - clamped_before
    if ground_truth is not None:
        record.recompute_metrics(ground_truth)
    return record


def _run_one(kwargs):
    return run_single(**kwargs)


def run_experiment(algorithm: str, env, budget: int, n_runs: int, seed: int, m: Optional[int] = None,
                   ground_truth: Optional[GroundTruth] = None, params: Optional[dict] = None,
                   parallel: int = 1, snapshot_every: Optional[int] = None, log_samples: bool = True,
                   config_hash: str = "") -> list[ExperimentRecord]:
    """``n_runs`` independent runs, returned in run order whatever ``parallel`` is."""
    check_budget(algorithm, env.n_arms, budget)
    jobs = [
        dict(algorithm=algorithm, env=env, budget=budget, seed=seed, run=r, m=m,
             ground_truth=ground_truth, params=params, snapshot_every=snapshot_every,
             log_samples=log_samples, config_hash=config_hash)
        for r in range(n_runs)
    ]
    if parallel > 1 and n_runs > 1:
        with ProcessPoolExecutor(parallel) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]


@dataclass
class Curves:
    mean_prop_correct: np.ndarray
    sd_prop_correct: np.ndarray
    mean_sum_means: np.ndarray
    sd_sum_means: np.ndarray

    def __len__(self):
        return len(self.mean_prop_correct)

    def write_csv(self, path, comment: Optional[str] = None) -> None:
        with open(path, "w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            w = csv.writer(fh)
            w.writerow(["sample_index", "mean_prop_correct", "sd_prop_correct", "mean_sum_means", "sd_sum_means"])
            for i in range(len(self)):
                w.writerow([i + 1, repr(float(self.mean_prop_correct[i])), repr(float(self.sd_prop_correct[i])),
                            repr(float(self.mean_sum_means[i])), repr(float(self.sd_sum_means[i]))])


def aggregate(records: Sequence[ExperimentRecord]) -> Curves:
    """Mean and standard deviation across runs at each sample index.

    Runs are truncated to the shortest trace.
    """
    if not records or any(r.proportion_correct is None for r in records):
        raise ValueError("aggregation needs records with metrics (attach a ground truth)")
    n = min(len(r.proportion_correct) for r in records)
    pc = np.array([r.proportion_correct[:n] for r in records])
    sm = np.array([r.sum_of_means[:n] for r in records])
    return Curves(pc.mean(0), pc.std(0), sm.mean(0), sm.std(0))
