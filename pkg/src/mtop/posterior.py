"""Truncated non-standardised Student-t posterior for Gaussian rewards.

With a Jeffreys prior ``sigma^-3`` on ``(mu, sigma^2)`` and rewards
``r_1..r_n`` the posterior over an arm's mean is a Student-t with

    location  mu0      = sum(r) / n
    scale^2   sigma0^2 = sum((r - mu0)^2) / n^2
    dof       nu       = n

restricted to [0, 1]. The t CDF and quantile are built on the regularized
incomplete beta function; the truncated mean uses the closed-form
antiderivative of ``u * f(u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

VARIANCE_FLOOR = 1e-12
LOWER, UPPER = 0.0, 1.0


class NotReadyError(RuntimeError):
    """The posterior is improper (fewer than two observations)."""


@dataclass(frozen=True)
class TDistParams:
    mu: float
    sigma: float
    nu: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"scale must be > 0, got {self.sigma}")
        if not self.nu > 0:
            raise ValueError(f"degrees of freedom must be > 0, got {self.nu}")


# -- standard Student-t ------------------------------------------------------

def _log_norm_const(nu):
    return special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * np.log(nu * np.pi)


def std_t_pdf(u, nu):
    u = np.asarray(u, dtype=float)
    return np.exp(_log_norm_const(nu) - (nu + 1) / 2 * np.log1p(u * u / nu))


def std_t_cdf(u, nu):
    """Standard t CDF from the regularized incomplete beta function.

    Near the centre ``I_{u^2/(nu+u^2)}(1/2, nu/2)`` is used; in the tails the
    complementary form ``I_{nu/(nu+u^2)}(nu/2, 1/2)`` keeps relative accuracy.
    """
    u = np.asarray(u, dtype=float)
    nu = np.asarray(nu, dtype=float)
    u2 = u * u
    central = u2 < nu
    with np.errstate(invalid="ignore", divide="ignore"):
        half_central = 0.5 * special.betainc(0.5, nu / 2, u2 / (nu + u2))
        tail = 0.5 * special.betainc(nu / 2, 0.5, nu / (nu + u2))
    out = np.where(
        central,
        0.5 + np.sign(u) * half_central,
        np.where(u < 0, tail, 1.0 - tail),
    )
    out = np.where(np.isneginf(u), 0.0, np.where(np.isposinf(u), 1.0, out))
    return out if out.ndim else float(out)


def std_t_quantile(q, nu):
    q = np.asarray(q, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.any((q <= 0) | (q >= 1) | np.isnan(q)):
        raise ValueError("quantile level must lie in the open interval (0, 1)")
    tail = np.minimum(q, 1.0 - q)
    central = tail >= 0.25
    with np.errstate(invalid="ignore", divide="ignore"):
        w = special.betaincinv(0.5, nu / 2, np.abs(2.0 * q - 1.0))
        mag_central = np.sqrt(nu * w / (1.0 - w))
        z = special.betaincinv(nu / 2, 0.5, 2.0 * tail)
        mag_tail = np.sqrt(nu * (1.0 - z) / z)
    mag = np.where(central, mag_central, mag_tail)
    out = np.where(q < 0.5, -mag, mag)
    return out if out.ndim else float(out)


def _antiderivative_u_pdf(u, nu):
    """G(u) with G'(u) = u * f_std(u)."""
    u = np.asarray(u, dtype=float)
    if nu == 1:
        return np.log1p(u * u) / (2 * np.pi)
    c = np.exp(_log_norm_const(nu))
    return -c * nu / (nu - 1) * np.exp(-(nu - 1) / 2 * np.log1p(u * u / nu))


# -- location-scale ----------------------------------------------------------

def t_pdf(params: TDistParams, x):
    return std_t_pdf((np.asarray(x, dtype=float) - params.mu) / params.sigma, params.nu) / params.sigma


def t_cdf(params: TDistParams, x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("t_cdf needs finite x")
    return std_t_cdf((x - params.mu) / params.sigma, params.nu)


def t_quantile(params: TDistParams, q):
    return params.mu + params.sigma * std_t_quantile(q, params.nu)


def _truncated_mass(a, b, nu):
    # both bounds in the right tail: difference of survival functions
    if a > 0:
        return std_t_cdf(-a, nu) - std_t_cdf(-b, nu)
    return std_t_cdf(b, nu) - std_t_cdf(a, nu)


def truncated_t_mean(mu: float, sigma: float, nu: float, lo: float = LOWER, hi: float = UPPER) -> float:
    """Mean of ``T_nu(mu, sigma^2)`` restricted to ``[lo, hi]``."""
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    mass = _truncated_mass(a, b, nu)
    if not mass > 0:
        # all mass numerically outside; the nearest bound is the limit
        return float(min(max(mu, lo), hi))
    inner = (_antiderivative_u_pdf(b, nu) - _antiderivative_u_pdf(a, nu)) / mass
    return float(min(max(mu + sigma * inner, lo), hi))


def truncated_t_sample(mu, sigma, nu, uniforms, lo: float = LOWER, hi: float = UPPER):
    """Inverse-CDF draws from ``T_nu(mu, sigma^2)`` restricted to ``[lo, hi]``.

    ``mu``, ``sigma``, ``nu`` and ``uniforms`` broadcast together.
    """
    mu, sigma, nu, uniforms = np.broadcast_arrays(
        np.asarray(mu, float), np.asarray(sigma, float), np.asarray(nu, float), np.asarray(uniforms, float)
    )
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    # reflect so the interval never sits entirely in the right tail; using
    # 1 - u on the mirrored side keeps the draw increasing in u
    flip = a > 0
    a, b = np.where(flip, -b, a), np.where(flip, -a, b)
    uniforms = np.where(flip, 1.0 - uniforms, uniforms)
    fa = std_t_cdf(a, nu)
    fb = std_t_cdf(b, nu)
    p = fa + uniforms * (fb - fa)
    # keep p strictly inside (0, 1) so the quantile is defined
    tiny = np.finfo(float).tiny
    p = np.clip(p, np.maximum(fa, tiny), np.minimum(fb, 1.0 - np.finfo(float).epsneg))
    u = std_t_quantile(p, nu)
    u = np.clip(u, a, b)
    u = np.where(flip, -u, u)
    x = np.clip(mu + sigma * u, lo, hi)
    return x if x.ndim else float(x)


# -- per-arm posterior -------------------------------------------------------

@dataclass(frozen=True)
class TruncatedTPosterior:
    """Sufficient statistics of one arm's rewards.

    ``sum_sq_dev`` is the running sum of squared deviations from the current
    mean (Welford), so ``sigma0_sq = sum_sq_dev / n**2``.
    """

    n: int = 0
    total: float = 0.0
    sum_sq_dev: float = 0.0

    @classmethod
    def from_rewards(cls, rewards) -> "TruncatedTPosterior":
        r = np.asarray(rewards, dtype=float)
        if r.size == 0:
            return cls()
        mean = r.mean()
        return cls(int(r.size), float(r.sum()), float(((r - mean) ** 2).sum()))

    def update(self, reward: float) -> "TruncatedTPosterior":
        if not 0.0 <= reward <= 1.0:
            raise ValueError(f"reward {reward!r} outside [0, 1]")
        n = self.n + 1
        old_mean = self.total / self.n if self.n else 0.0
        total = self.total + reward
        new_mean = total / n
        ssd = self.sum_sq_dev + (reward - old_mean) * (reward - new_mean) if self.n else 0.0
        return TruncatedTPosterior(n, total, ssd)

    @property
    def mu0(self) -> float:
        if self.n == 0:
            raise NotReadyError("no observations")
        return self.total / self.n

    @property
    def sigma0_sq(self) -> float:
        if self.n == 0:
            raise NotReadyError("no observations")
        return max(self.sum_sq_dev / self.n**2, VARIANCE_FLOOR)

    @property
    def nu(self) -> int:
        return self.n

    @property
    def is_proper(self) -> bool:
        return self.n >= 2

    @property
    def is_degenerate(self) -> bool:
        return self.sum_sq_dev / max(self.n, 1) ** 2 <= VARIANCE_FLOOR

    def _require_proper(self):
        if not self.is_proper:
            raise NotReadyError(f"posterior needs at least 2 observations, has {self.n}")

    def params(self) -> TDistParams:
        self._require_proper()
        return TDistParams(self.mu0, math.sqrt(self.sigma0_sq), float(self.nu))

    def truncated_mean(self) -> float:
        self._require_proper()
        if self.is_degenerate:
            return min(max(self.mu0, LOWER), UPPER)
        p = self.params()
        return truncated_t_mean(p.mu, p.sigma, p.nu)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        self._require_proper()
        if self.is_degenerate:
            value = min(max(self.mu0, LOWER), UPPER)
            return value if size is None else np.full(size, value)
        p = self.params()
        return truncated_t_sample(p.mu, p.sigma, p.nu, rng.random(size))

    def snapshot(self, arm: int) -> dict:
        return {
            "arm": arm,
            "n": self.n,
            "mu0": self.mu0 if self.n else None,
            "sigma0_sq": self.sigma0_sq if self.n else None,
            "nu": self.nu,
            "truncated_mean": self.truncated_mean() if self.is_proper else None,
            "total": self.total,
            "sum_sq_dev": self.sum_sq_dev,
        }

    @classmethod
    def from_snapshot(cls, snap: dict) -> "TruncatedTPosterior":
        return cls(int(snap["n"]), float(snap["total"]), float(snap["sum_sq_dev"]))


def sample_posteriors(posteriors, rng: np.random.Generator) -> np.ndarray:
    """One joint draw, a value per arm, using a single vectorised inverse-CDF pass."""
    for p in posteriors:
        p._require_proper()
    mu = np.array([p.mu0 for p in posteriors])
    var = np.array([p.sigma0_sq for p in posteriors])
    nu = np.array([p.nu for p in posteriors], dtype=float)
    degenerate = np.array([p.is_degenerate for p in posteriors])
    u = rng.random(len(posteriors))
    draws = truncated_t_sample(mu, np.sqrt(var), nu, u)
    return np.where(degenerate, np.clip(mu, LOWER, UPPER), draws)
