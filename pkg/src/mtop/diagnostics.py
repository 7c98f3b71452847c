"""Monte-Carlo estimates of decision-boundary error probabilities for a
Thompson-sampling posterior state.

Two independent joint draws are taken from the posterior per Monte-Carlo
replicate. The first stands in for the unknown means (its top-m is the
believed optimal set J*); the second is the Thompson sample, whose ranking
gives A^TS_rho. Because Thompson sampling is probability matching, both
draws come from the same distribution.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .core import ConfigError
from .posterior import NotReadyError


class DiscretePosterior:
    """A posterior over an arm's mean supported on finitely many points."""

    def __init__(self, values: Sequence[float], probs: Sequence[float]):
        self.values = np.asarray(values, dtype=float)
        self.probs = np.asarray(probs, dtype=float)
        if self.values.shape != self.probs.shape or self.values.ndim != 1:
            raise ValueError("values and probs must be 1-d and the same length")
        if (self.probs < 0).any() or not math.isclose(self.probs.sum(), 1.0, abs_tol=1e-12):
            raise ValueError("probs must be nonnegative and sum to 1")

    is_proper = True

    def sample(self, rng: np.random.Generator, size=None):
        return rng.choice(self.values, size=size, p=self.probs)


def _draw(posteriors, rng, n) -> np.ndarray:
    cols = []
    for k, p in enumerate(posteriors):
        if not getattr(p, "is_proper", True):
            raise NotReadyError(f"posterior of arm {k} is not proper")
        cols.append(np.asarray(p.sample(rng, n), dtype=float))
    return np.column_stack(cols)


def _rank(draws: np.ndarray) -> np.ndarray:
    # row-wise descending ranking, lowest index first on ties
    return np.argsort(-draws, axis=1, kind="stable")


@dataclass
class BoundaryReport:
    n_mc: int
    n_arms: int
    m: int
    # P_t(A^TS_rho in J*) for rho = 1..K, and standard errors
    p_rank_in_top: list[float]
    se_rank_in_top: list[float]
    p_error: float
    se_error: float
    union_sum: float
    mean_below: float  # E over rho > m of P(A^TS_rho in J*)
    mean_above: float  # E over rho <= m of P(A^TS_rho not in J*)
    bound_below: float  # (K - m) * P(A^TS_{m+1} in J*)
    bound_above: float  # m * P(A^TS_m not in J*)
    heuristic1: bool
    heuristic2: bool
    heuristic1_margin: float
    heuristic2_margin: float
    se_heuristic1: float
    se_heuristic2: float
    belief_rank_freq: list[list[float]]  # [arm][rank]
    ts_rank_freq: list[list[float]]

    @property
    def p_rank_outside_top(self) -> list[float]:
        return [1.0 - p for p in self.p_rank_in_top]

    def to_dict(self) -> dict:
        return asdict(self)


def estimate_boundary_probabilities(posteriors, m: int, n_mc: int, rng: np.random.Generator,
                                    batch: int = 100_000) -> BoundaryReport:
    """Estimate every boundary probability from ``n_mc`` pairs of joint posterior draws.

    Heuristic flags are only cleared when the estimated violation exceeds
    three standard errors of the paired difference.
    """
    K = len(posteriors)
    if not 1 <= m < K:
        raise ConfigError(f"need 1 <= m < K, got m={m}, K={K}")
    if n_mc < 1:
        raise ConfigError("n_mc must be positive")

    hits = np.zeros(K)  # sum over replicates of 1[A^TS_rho in J*]
    err = 0
    h1 = np.zeros(2)  # sum and sum of squares of the heuristic-1 paired difference
    h2 = np.zeros(2)
    belief_freq = np.zeros((K, K))
    ts_freq = np.zeros((K, K))
    rows = np.arange(min(batch, n_mc))[:, None]
    done = 0
    while done < n_mc:
        n = min(batch, n_mc - done)
        belief = _rank(_draw(posteriors, rng, n))
        ts = _rank(_draw(posteriors, rng, n))
        in_top = np.zeros((n, K), dtype=bool)
        in_top[rows[:n], belief[:, :m]] = True
        ts_in_top = np.take_along_axis(in_top, ts, axis=1)  # [i, rho-1]

        hits += ts_in_top.sum(axis=0)
        err += int(ts_in_top[:, m:].any(axis=1).sum())
        d1 = ts_in_top[:, m:].mean(axis=1) - ts_in_top[:, m]
        d2 = (~ts_in_top[:, :m]).mean(axis=1) - (~ts_in_top[:, m - 1])
        h1 += (d1.sum(), (d1 * d1).sum())
        h2 += (d2.sum(), (d2 * d2).sum())
        for rho in range(K):
            belief_freq[:, rho] += np.bincount(belief[:, rho], minlength=K)
            ts_freq[:, rho] += np.bincount(ts[:, rho], minlength=K)
        done += n

    p = hits / n_mc
    se = np.sqrt(p * (1 - p) / n_mc)
    p_err = err / n_mc

    def mean_se(acc):
        mean = acc[0] / n_mc
        var = max(acc[1] / n_mc - mean * mean, 0.0)
        return mean, math.sqrt(var / n_mc)

    d1_mean, d1_se = mean_se(h1)
    d2_mean, d2_se = mean_se(h2)
    return BoundaryReport(
        n_mc=n_mc,
        n_arms=K,
        m=m,
        p_rank_in_top=p.tolist(),
        se_rank_in_top=se.tolist(),
        p_error=p_err,
        se_error=math.sqrt(p_err * (1 - p_err) / n_mc),
        union_sum=float(p[m:].sum()),
        mean_below=float(p[m:].sum() / (K - m)),
        mean_above=float((1 - p[:m]).sum() / m),
        bound_below=float((K - m) * p[m]),
        bound_above=float(m * (1 - p[m - 1])),
        heuristic1=bool(d1_mean <= 3 * d1_se),
        heuristic2=bool(d2_mean <= 3 * d2_se),
        heuristic1_margin=float(-d1_mean),
        heuristic2_margin=float(-d2_mean),
        se_heuristic1=d1_se,
        se_heuristic2=d2_se,
        belief_rank_freq=(belief_freq / n_mc).tolist(),
        ts_rank_freq=(ts_freq / n_mc).tolist(),
    )


@dataclass
class BoundCheck:
    union_holds: bool
    union_margin: float
    below_chain_holds: bool  # only meaningful when heuristic 1 holds
    below_margin: float
    above_chain_holds: bool
    above_margin: float
    heuristic1: bool
    heuristic2: bool

    @property
    def violations(self) -> list[str]:
        out = []
        if not self.union_holds:
            out.append("union")
        if self.heuristic1 and not self.below_chain_holds:
            out.append("below-boundary chain")
        if self.heuristic2 and not self.above_chain_holds:
            out.append("above-boundary chain")
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["violations"] = self.violations
        return d


def check_union_bounds(report: BoundaryReport) -> BoundCheck:
    """Compare the error probability with its union bound and the two
    heuristic bounds, allowing three standard errors of Monte-Carlo noise.

    Violations are reported, never raised: posteriors for which the
    heuristics fail do exist.
    """
    tol = 3 * report.se_error
    union_margin = report.union_sum - report.p_error
    below_margin = report.bound_below - report.p_error
    above_margin = report.bound_above - report.p_error
    se_m1 = report.se_rank_in_top[report.m]
    se_m = report.se_rank_in_top[report.m - 1]
    return BoundCheck(
        union_holds=union_margin >= -tol,
        union_margin=union_margin,
        below_chain_holds=below_margin >= -(tol + 3 * (report.n_arms - report.m) * se_m1),
        below_margin=below_margin,
        above_chain_holds=above_margin >= -(tol + 3 * report.m * se_m),
        above_margin=above_margin,
        heuristic1=report.heuristic1,
        heuristic2=report.heuristic2,
    )
