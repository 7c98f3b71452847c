"""Age-structured chain-binomial SEIR model with vaccination cohorts, and the
bandit whose arms are vaccine-allocation strategies."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..core import EnvironmentDescriptor, check_arm, clip_reward
from .config import EpidemicConfig
from .strategies import AGE_GROUPS, N_GROUPS, Vaccine, VaccineStrategy

log = logging.getLogger(__name__)

VACCINES = (Vaccine.MRNA, Vaccine.VECTOR)
OBJECTIVES = ("ari", "arh")


@dataclass
class SimOutcome:
    """Final attack rates plus daily per-group series (``days + 1`` rows, day 0 first)."""

    ari: float
    arh: float
    S: np.ndarray
    E: np.ndarray
    I: np.ndarray
    R: np.ndarray
    vaccinated: np.ndarray  # (days + 1, groups, 2) cumulative doses, mRNA then vector
    infected_cum: np.ndarray
    hospitalized_cum: np.ndarray
    discarded_doses: int = 0

    @property
    def days(self) -> int:
        return self.S.shape[0] - 1

    def attack_rates(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.S[0].sum() + self.E[0].sum() + self.I[0].sum() + self.R[0].sum()
        return self.infected_cum.sum(axis=1) / n, self.hospitalized_cum.sum(axis=1) / n

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["day", "group", "S", "E", "I", "R",
                        "vaccinated_mrna", "vaccinated_vector", "hospitalized_cum"])
            for d in range(self.days + 1):
                for g, name in enumerate(AGE_GROUPS):
                    w.writerow([d, name, self.S[d, g], self.E[d, g], self.I[d, g], self.R[d, g],
                                self.vaccinated[d, g, 0], self.vaccinated[d, g, 1],
                                self.hospitalized_cum[d, g]])


def epidemic_reward(outcome: SimOutcome, objective: str = "ari") -> float:
    """``1 - ARI`` or ``1 - ARH``."""
    objective = objective.lower()
    if objective == "ari":
        return 1.0 - outcome.ari
    if objective == "arh":
        return 1.0 - outcome.arh
    raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")


def daily_doses(weekly: np.ndarray, day: int) -> int:
    """Doses available on ``day`` when each week's delivery is spread evenly over 7 days."""
    week, k = divmod(day, 7)
    if week >= len(weekly):
        return 0
    w = int(weekly[week])
    return w * (k + 1) // 7 - w * k // 7


def _fill(doses: int, groups: Sequence[int], weights: np.ndarray, capacity: np.ndarray, out: np.ndarray) -> int:
    """Spread ``doses`` over ``groups`` proportionally to ``weights`` without
    exceeding ``capacity``; integer leftovers go to the lowest group index first.
    Mutates ``capacity`` and ``out``; returns the undistributed doses."""
    while doses > 0:
        active = [g for g in groups if capacity[g] > 0]
        if not active:
            break
        w = weights[active]
        share = np.floor(doses * w / w.sum()).astype(np.int64)
        give = np.minimum(share, capacity[active])
        if give.sum() == 0:
            for g in active:
                if doses == 0:
                    break
                capacity[g] -= 1
                out[g] += 1
                doses -= 1
            continue
        for g, n in zip(active, give):
            capacity[g] -= n
            out[g] += n
        doses -= int(give.sum())
    return doses


def allocate_doses(strategy: VaccineStrategy, doses: Sequence[int], unvaccinated: np.ndarray,
                   group_sizes: np.ndarray) -> tuple[np.ndarray, int]:
    """Per-group doses for each vaccine type on one day.

    Each type goes first to the groups the strategy assigns it to, in
    proportion to group size. Doses those groups cannot absorb spill over to
    all remaining groups, again by size. mRNA is allocated before vector.
    Returns the ``(groups, 2)`` allocation and the number of doses discarded
    because nobody is left to vaccinate.
    """
    capacity = np.array(unvaccinated, dtype=np.int64)
    weights = np.asarray(group_sizes, dtype=float)
    alloc = np.zeros((N_GROUPS, 2), dtype=np.int64)
    discarded = 0
    for j, vaccine in enumerate(VACCINES):
        remaining = int(doses[j])
        preferred = strategy.groups_with(vaccine)
        others = [g for g in range(N_GROUPS) if g not in preferred]
        column = np.zeros(N_GROUPS, dtype=np.int64)
        remaining = _fill(remaining, preferred, weights, capacity, column)
        remaining = _fill(remaining, others, weights, capacity, column)
        alloc[:, j] = column
        discarded += remaining
    return alloc, discarded


def simulate_epidemic(config: EpidemicConfig, strategy: VaccineStrategy, seed=None) -> SimOutcome:
    """One stochastic run of the model under ``strategy``.

    Every day: vaccinate (doses drawn without replacement from each group's
    unvaccinated members, whatever their infection state), infect, then
    progress E->I and I->R. Vaccinated people sit in cohorts indexed by
    (group, vaccine, dose day); a cohort's protection ramps linearly to full
    efficacy over the vaccine's activation period.
    """
    rng = np.random.default_rng(seed)
    G, V, H = N_GROUPS, 2, config.horizon_days
    n = np.asarray(config.group_sizes, dtype=np.int64)
    n_total = int(n.sum())
    contacts = config.effective_contacts()
    q = config.transmission_probability
    h = np.asarray(config.hospitalisation, dtype=float)
    p_ei = 1.0 - np.exp(-1.0 / config.latent_days)
    p_ir = 1.0 - np.exp(-1.0 / config.infectious_days)
    profiles = [config.vaccines[v] for v in VACCINES]
    ve_s = np.array([p.ve_susceptibility for p in profiles])[None, :, None]
    ve_i = np.array([p.ve_infectiousness for p in profiles])[None, :, None]
    ve_d = np.array([p.ve_disease for p in profiles])[None, :, None]
    act_days = np.array([p.activation_days for p in profiles], dtype=float)[:, None]
    weekly = [config.weekly_doses(v) for v in VACCINES]

    r = np.rint(config.initial_recovered_fraction * n).astype(np.int64)
    i = np.rint(config.initial_infected_fraction * n).astype(np.int64)
    s = n - r - i
    e = np.zeros(G, dtype=np.int64)
    vs = np.zeros((G, V, H), dtype=np.int64)
    ve = np.zeros_like(vs)
    vi = np.zeros_like(vs)
    vr = np.zeros_like(vs)

    infected_cum = i.copy()
    hosp_cum = rng.binomial(i, h)
    vacc_cum = np.zeros((G, V), dtype=np.int64)
    discarded_total = 0

    rec = {k: np.zeros((H + 1, G), dtype=np.int64) for k in ("S", "E", "I", "R", "inf", "hosp")}
    rec_vacc = np.zeros((H + 1, G, V), dtype=np.int64)

    def record(d):
        rec["S"][d] = s + vs.sum(axis=(1, 2))
        rec["E"][d] = e + ve.sum(axis=(1, 2))
        rec["I"][d] = i + vi.sum(axis=(1, 2))
        rec["R"][d] = r + vr.sum(axis=(1, 2))
        rec["inf"][d] = infected_cum
        rec["hosp"][d] = hosp_cum
        rec_vacc[d] = vacc_cum

    record(0)
    for d in range(H):
        doses = [daily_doses(weekly[j], d) for j in range(V)]
        if doses[0] or doses[1]:
            unvaccinated = s + e + i + r
            alloc, discarded = allocate_doses(strategy, doses, unvaccinated, n)
            discarded_total += discarded
            for g in range(G):
                for j in range(V):
                    k = int(alloc[g, j])
                    if k == 0:
                        continue
                    picked = rng.multivariate_hypergeometric([s[g], e[g], i[g], r[g]], k)
                    s[g] -= picked[0]
                    e[g] -= picked[1]
                    i[g] -= picked[2]
                    r[g] -= picked[3]
                    vs[g, j, d] += picked[0]
                    ve[g, j, d] += picked[1]
                    vi[g, j, d] += picked[2]
                    vr[g, j, d] += picked[3]
                    vacc_cum[g, j] += k

        c = slice(0, d + 1)  # cohorts dosed so far
        activation = np.clip((d - np.arange(d + 1))[None, :] / act_days, 0.0, 1.0)[None, :, :]
        cvs, cve, cvi = vs[:, :, c], ve[:, :, c], vi[:, :, c]

        infectious = i + (cvi * (1.0 - activation * ve_i)).sum(axis=(1, 2))
        hazard = q * contacts @ (infectious / n)
        new_u = rng.binomial(s, 1.0 - np.exp(-hazard))
        new_v = rng.binomial(cvs, 1.0 - np.exp(-hazard[:, None, None] * (1.0 - activation * ve_s)))
        hosp_cum += rng.binomial(new_u, h)
        hosp_cum += rng.binomial(new_v, h[:, None, None] * (1.0 - activation * ve_d)).sum(axis=(1, 2))

        onset_u = rng.binomial(e, p_ei)
        onset_v = rng.binomial(cve, p_ei)
        recover_u = rng.binomial(i, p_ir)
        recover_v = rng.binomial(cvi, p_ir)

        s -= new_u
        e += new_u - onset_u
        i += onset_u - recover_u
        r += recover_u
        vs[:, :, c] -= new_v
        ve[:, :, c] += new_v - onset_v
        vi[:, :, c] += onset_v - recover_v
        vr[:, :, c] += recover_v
        infected_cum += new_u + new_v.sum(axis=(1, 2))
        record(d + 1)

    if discarded_total:
        log.debug("discarded %d doses with no one left to vaccinate", discarded_total)
    return SimOutcome(
        ari=float(infected_cum.sum() / n_total),
        arh=float(hosp_cum.sum() / n_total),
        S=rec["S"], E=rec["E"], I=rec["I"], R=rec["R"],
        vaccinated=rec_vacc,
        infected_cum=rec["inf"],
        hospitalized_cum=rec["hosp"],
        discarded_doses=discarded_total,
    )


class EpidemicBandit:
    """Bandit whose arm ``k`` runs the model under ``strategies[k]``.

    Each pull draws a fresh simulation seed from the given generator, so a
    pull is a deterministic function of that generator's state.
    """

    def __init__(self, config: EpidemicConfig, strategies: Sequence[VaccineStrategy],
                 objective: str = "ari", m: int = 1, seed=None):
        if objective.lower() not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        self.config = config
        self.strategies = list(strategies)
        self.objective = objective.lower()
        self.n_arms = len(self.strategies)
        self.descriptor = EnvironmentDescriptor(self.n_arms, m)
        self.rng = np.random.default_rng(seed)
        self.n_pulls = 0
        self.n_clamped = 0
        self.discarded_doses = 0
        self.last_outcome: Optional[SimOutcome] = None

    @property
    def m(self) -> int:
        return self.descriptor.m

    def simulate(self, arm: int, seed) -> SimOutcome:
        return simulate_epidemic(self.config, self.strategies[check_arm(arm, self.n_arms)], seed)

    def sample(self, arm: int, rng: np.random.Generator) -> float:
        arm = check_arm(arm, self.n_arms)
        outcome = self.simulate(arm, int(rng.integers(2**63)))
        self.last_outcome = outcome
        self.n_pulls += 1
        self.discarded_doses += outcome.discarded_doses
        value, clamped = clip_reward(epidemic_reward(outcome, self.objective))
        self.n_clamped += clamped
        return value

    def pull(self, arm: int) -> float:
        return self.sample(arm, self.rng)

    def reseed(self, seed) -> None:
        self.rng = np.random.default_rng(seed)

    def describe(self) -> dict:
        return {
            "kind": "epidemic",
            "m": self.m,
            "objective": self.objective,
            "strategies": [s.code for s in self.strategies],
            "config": self.config.to_dict(),
        }
