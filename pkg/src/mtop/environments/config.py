"""Epidemic model configuration: TOML loading, scenarios and calibration."""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import math
import re
import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from ..core import ConfigError
from .strategies import N_GROUPS, Vaccine

CONTEXTS = ("primary_school", "secondary_school", "tertiary_education", "workplace", "community", "household")
REDUCTION_KEYS = ("primary", "secondary", "tertiary", "workplace", "community")
CONTEXT_REDUCTION = dict(zip(CONTEXTS, REDUCTION_KEYS))  # household has no reduction
SCENARIOS = (
    "Baseline",
    "Relaxed",
    "TertiaryEducation",
    "SecondarySchools",
    "RelaxedCommunity",
    "RelaxedWorkplace",
)
DEFAULTS_RESOURCE = "epidemic_defaults.toml"


@dataclass(frozen=True)
class VaccineProfile:
    ve_susceptibility: float
    ve_infectiousness: float
    ve_disease: float
    activation_days: int = 42

    def __post_init__(self):
        for name in ("ve_susceptibility", "ve_infectiousness", "ve_disease"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.activation_days <= 0:
            raise ConfigError("activation_days must be > 0")

    def activation(self, days_since_dose):
        """Linear ramp from 0 on the dose day to 1 after ``activation_days``."""
        return np.clip(np.asarray(days_since_dose, dtype=float) / self.activation_days, 0.0, 1.0)


def make_reciprocal(matrix, group_sizes) -> np.ndarray:
    """Average total contacts so that ``N_i M_ij == N_j M_ji``."""
    m = np.asarray(matrix, dtype=float)
    n = np.asarray(group_sizes, dtype=float)
    total = n[:, None] * m
    total = 0.5 * (total + total.T)
    return total / n[:, None]


def normalise_scenario(name: str) -> str:
    key = re.sub(r"[^a-z]", "", name.lower())
    for s in SCENARIOS:
        if s.lower() == key:
            return s
    raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")


@dataclass(frozen=True)
class EpidemicConfig:
    group_sizes: tuple[int, ...]
    contacts: Mapping[str, np.ndarray]
    reductions: Mapping[str, float]
    transmission_probability: float
    latent_days: float
    infectious_days: float
    hospitalisation: tuple[float, ...]
    initial_recovered_fraction: float
    initial_infected_fraction: float
    vaccines: Mapping[Vaccine, VaccineProfile]
    supply: Mapping[Vaccine, tuple[float, ...]]
    horizon_days: int = 120
    scenario: Optional[str] = None

    def __post_init__(self):
        if len(self.group_sizes) != N_GROUPS or min(self.group_sizes) <= 0:
            raise ConfigError(f"need {N_GROUPS} positive group sizes")
        if set(self.contacts) != set(CONTEXTS):
            raise ConfigError(f"contact contexts must be {CONTEXTS}")
        for name, mat in self.contacts.items():
            mat = np.asarray(mat)
            if mat.shape != (N_GROUPS, N_GROUPS) or (mat < 0).any():
                raise ConfigError(f"contact matrix {name!r} must be a nonnegative {N_GROUPS}x{N_GROUPS} array")
        if set(self.reductions) != set(REDUCTION_KEYS):
            raise ConfigError(f"reductions must cover {REDUCTION_KEYS}")
        if any(not 0.0 <= c <= 1.0 for c in self.reductions.values()):
            raise ConfigError("contact reductions must lie in [0, 1]")
        if not 0.0 <= self.transmission_probability < 1.0:
            raise ConfigError("transmission probability must lie in [0, 1)")
        if self.latent_days <= 0 or self.infectious_days <= 0:
            raise ConfigError("latent and infectious periods must be > 0")
        if len(self.hospitalisation) != N_GROUPS or any(not 0 <= h <= 1 for h in self.hospitalisation):
            raise ConfigError("hospitalisation probabilities must be 5 values in [0, 1]")
        if not 0 <= self.initial_recovered_fraction + self.initial_infected_fraction <= 1:
            raise ConfigError("initial recovered + infected fractions must lie in [0, 1]")
        if self.horizon_days < 1:
            raise ConfigError("horizon must be >= 1 day")
        if any(f < 0 for fr in self.supply.values() for f in fr):
            raise ConfigError("supply must be nonnegative")

    @property
    def population(self) -> int:
        return int(sum(self.group_sizes))

    def effective_contacts(self) -> np.ndarray:
        total = np.zeros((N_GROUPS, N_GROUPS))
        for ctx in CONTEXTS:
            reduction = self.reductions[CONTEXT_REDUCTION[ctx]] if ctx in CONTEXT_REDUCTION else 0.0
            total += (1.0 - reduction) * np.asarray(self.contacts[ctx])
        return total

    def with_reductions(self, **reductions) -> "EpidemicConfig":
        new = dict(self.reductions)
        for k, v in reductions.items():
            if k not in REDUCTION_KEYS:
                raise ConfigError(f"unknown reduction {k!r}")
            new[k] = float(v)
        return replace(self, reductions=new, scenario=None)

    def with_population(self, size: int) -> "EpidemicConfig":
        fractions = np.asarray(self.group_sizes, float) / self.population
        return replace(self, group_sizes=_split_population(size, fractions))

    def without_supply(self) -> "EpidemicConfig":
        return replace(self, supply={v: tuple(0.0 for _ in s) for v, s in self.supply.items()})

    def replace(self, **changes) -> "EpidemicConfig":
        return replace(self, **changes)

    def weekly_doses(self, vaccine: Vaccine) -> np.ndarray:
        """Doses per week (integers), from the population-fraction schedule."""
        return np.rint(np.asarray(self.supply[vaccine], float) * self.population).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "group_sizes": list(self.group_sizes),
            "contacts": {k: np.asarray(v).tolist() for k, v in self.contacts.items()},
            "reductions": dict(self.reductions),
            "transmission_probability": self.transmission_probability,
            "latent_days": self.latent_days,
            "infectious_days": self.infectious_days,
            "hospitalisation": list(self.hospitalisation),
            "initial_recovered_fraction": self.initial_recovered_fraction,
            "initial_infected_fraction": self.initial_infected_fraction,
            "vaccines": {
                v.name.lower(): {
                    "ve_susceptibility": p.ve_susceptibility,
                    "ve_infectiousness": p.ve_infectiousness,
                    "ve_disease": p.ve_disease,
                    "activation_days": p.activation_days,
                }
                for v, p in self.vaccines.items()
            },
            "supply": {v.name.lower(): list(s) for v, s in self.supply.items()},
            "horizon_days": self.horizon_days,
        }

    def config_hash(self) -> str:
        return stable_hash(self.to_dict())

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "EpidemicConfig":
        return cls(
            group_sizes=tuple(int(x) for x in d["group_sizes"]),
            contacts={k: np.asarray(v, float) for k, v in d["contacts"].items()},
            reductions={k: float(v) for k, v in d["reductions"].items()},
            transmission_probability=float(d["transmission_probability"]),
            latent_days=float(d["latent_days"]),
            infectious_days=float(d["infectious_days"]),
            hospitalisation=tuple(float(h) for h in d["hospitalisation"]),
            initial_recovered_fraction=float(d["initial_recovered_fraction"]),
            initial_infected_fraction=float(d["initial_infected_fraction"]),
            vaccines={Vaccine[k.upper()]: VaccineProfile(**v) for k, v in d["vaccines"].items()},
            supply={Vaccine[k.upper()]: tuple(float(x) for x in v) for k, v in d["supply"].items()},
            horizon_days=int(d["horizon_days"]),
            scenario=d.get("scenario"),
        )


def stable_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _split_population(size: int, fractions) -> tuple[int, ...]:
    """Integer group sizes summing to ``size`` (largest remainder)."""
    fractions = np.asarray(fractions, float)
    if fractions.shape != (N_GROUPS,) or (fractions < 0).any() or not math.isclose(fractions.sum(), 1.0, abs_tol=1e-9):
        raise ConfigError(f"group fractions must be {N_GROUPS} nonnegative numbers summing to 1")
    raw = fractions * size
    base = np.floor(raw).astype(np.int64)
    short = int(size - base.sum())
    order = np.argsort(-(raw - base), kind="stable")
    base[order[:short]] += 1
    if (base <= 0).any():
        raise ConfigError(f"population {size} too small for every age group")
    return tuple(int(x) for x in base)


def _deep_merge(base: dict, override: Mapping) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def default_tree() -> dict:
    text = resources.files(__package__).joinpath("data", DEFAULTS_RESOURCE).read_text()
    tree = tomllib.loads(text)
    tree["_base_dir"] = None
    return tree


def read_supply_csv(path) -> dict[Vaccine, tuple[float, ...]]:
    if isinstance(path, Path) or Path(str(path)).is_absolute():
        text = Path(path).read_text()
    else:
        text = resources.files(__package__).joinpath("data", str(path)).read_text()
    rows = list(csv.DictReader(text.splitlines()))
    rows.sort(key=lambda r: int(r["week"]))
    return {
        Vaccine.MRNA: tuple(float(r["mrna"]) for r in rows),
        Vaccine.VECTOR: tuple(float(r["vector"]) for r in rows),
    }


def scenario_reductions(name: str, tree: Optional[Mapping] = None) -> dict[str, float]:
    tree = default_tree() if tree is None else tree
    key = normalise_scenario(name)
    try:
        row = tree["scenarios"][key]
    except KeyError:
        raise ConfigError(f"scenario {key!r} missing from configuration") from None
    return {k: float(row[k]) for k in REDUCTION_KEYS}


def calibrate_transmission(contacts: Mapping[str, np.ndarray], infectious_days: float, r0: float) -> float:
    """Per-contact transmission probability giving the requested R0 without reductions.

    The next-generation matrix ``q * D * M_ij * N_i / N_j`` is similar to
    ``q * D * M``, so ``R0 = q * D * rho(M)``.
    """
    total = sum(np.asarray(m, float) for m in contacts.values())
    rho = float(np.max(np.abs(np.linalg.eigvals(total))))
    return r0 / (infectious_days * rho)


def build_config(tree: Mapping, scenario: Optional[str] = "Baseline", population: Optional[int] = None) -> EpidemicConfig:
    pop = tree["population"]
    size = int(population if population is not None else pop["size"])
    group_sizes = _split_population(size, pop["group_fractions"])
    fractions = np.asarray(group_sizes, float)
    contacts = {ctx: make_reciprocal(tree["contacts"][ctx], fractions) for ctx in CONTEXTS}

    disease = tree["disease"]
    if "transmission_probability" in disease:
        q = float(disease["transmission_probability"])
    else:
        ref = _split_population(10**6, pop["group_fractions"])
        ref_contacts = {ctx: make_reciprocal(tree["contacts"][ctx], ref) for ctx in CONTEXTS}
        q = calibrate_transmission(ref_contacts, disease["infectious_days"], disease["basic_reproduction_number"])

    if "reductions" in tree:
        reductions = {k: float(tree["reductions"][k]) for k in REDUCTION_KEYS}
        scenario = tree.get("scenario_name")
    elif scenario is not None:
        reductions = scenario_reductions(scenario, tree)
        scenario = normalise_scenario(scenario)
    else:
        reductions = {k: 0.0 for k in REDUCTION_KEYS}

    supply_tree = tree.get("supply", {})
    if "file" in supply_tree:
        f = Path(supply_tree["file"])
        base = tree.get("_base_dir")
        if base is not None and not f.is_absolute():
            f = Path(base) / f
        supply = read_supply_csv(f if (base is not None or f.is_absolute()) else supply_tree["file"])
    else:
        supply = {
            Vaccine.MRNA: tuple(float(x) for x in supply_tree.get("mrna", ())),
            Vaccine.VECTOR: tuple(float(x) for x in supply_tree.get("vector", ())),
        }

    vaccines = {Vaccine[k.upper()]: VaccineProfile(**v) for k, v in tree["vaccines"].items()}
    return EpidemicConfig(
        group_sizes=group_sizes,
        contacts=contacts,
        reductions=reductions,
        transmission_probability=q,
        latent_days=float(disease["latent_days"]),
        infectious_days=float(disease["infectious_days"]),
        hospitalisation=tuple(float(h) for h in disease["hospitalisation"]),
        initial_recovered_fraction=float(pop["initial_recovered_fraction"]),
        initial_infected_fraction=float(pop["initial_infected_fraction"]),
        vaccines=vaccines,
        supply=supply,
        horizon_days=int(disease.get("horizon_days", 120)),
        scenario=scenario,
    )


def load_config(path=None, scenario: Optional[str] = "Baseline", population: Optional[int] = None) -> EpidemicConfig:
    """Defaults, optionally overridden by a TOML file, for one scenario.

    A user file only needs the keys it changes. A ``[reductions]`` table in it
    replaces the scenario's reductions.
    """
    tree = default_tree()
    if path is not None:
        path = Path(path)
        try:
            user = tomllib.loads(path.read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        user = user.get("epidemic", user)
        tree = _deep_merge(tree, user)
        if "supply" in user:
            if "file" in user["supply"]:
                tree["_base_dir"] = str(path.parent)
            else:
                tree["supply"].pop("file", None)
    return build_config(tree, scenario=scenario, population=population)


def scenario_config(name: str, population: Optional[int] = None) -> EpidemicConfig:
    return load_config(scenario=name, population=population)
