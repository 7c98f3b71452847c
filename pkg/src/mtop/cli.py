"""Command-line entry point: ``mtop {enumerate,ground-truth,run,diagnose}``.

Settings come from an optional TOML file (``--config``); command-line flags
override it. Exit status is 0 on success, 1 for usage or configuration
errors and 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .core import ConfigError
from .diagnostics import DiscretePosterior, check_union_bounds, estimate_boundary_probabilities
from .environments import (
    AGE_GROUPS,
    EpidemicBandit,
    SyntheticBandit,
    enumerate_strategies,
)
from .environments.config import _deep_merge, build_config, default_tree, stable_hash, tomllib
from .evaluation import GroundTruth, aggregate, run_experiment, run_seed_sequence, build_ground_truth
from .posterior import TruncatedTPosterior

log = logging.getLogger("mtop")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

DEFAULTS = {
    "experiment": {
        "algorithm": "bfts",
        "budget": 2000,
        "runs": 1,
        "seed": 0,
        "m": 10,
        "parallel": 1,
        "repetitions": 100,
        "snapshot_every": 100,
    },
    "environment": {
        "kind": "epidemic",
        "scenario": "Baseline",
        "objective": "ari",
    },
    "atlucb": {"delta1": 0.5, "alpha": 0.99, "epsilon": 0.0},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(" ", "").split(",") if x]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(" ", "").split(",") if x]


def _add_common(p: argparse.ArgumentParser, *names: str) -> None:
    opts = {
        "config": dict(flags=["--config"], type=Path, help="TOML settings file"),
        "out": dict(flags=["--out"], type=Path, help="output directory (created if absent)"),
        "seed": dict(flags=["--seed"], type=int, help="base random seed"),
        "budget": dict(flags=["--budget"], type=int, help="sample budget (environment pulls) per run"),
        "algorithm": dict(flags=["--algorithm"], choices=["bfts", "atlucb", "uniform"]),
        "scenario": dict(flags=["--scenario"], help="contact-reduction scenario name"),
        "objective": dict(flags=["--objective"], choices=["ari", "arh"]),
        "m": dict(flags=["--m"], type=int, help="size of the recommended set"),
        "repetitions": dict(flags=["--repetitions"], type=int, help="pulls per arm for the ground truth"),
        "parallel": dict(flags=["--parallel"], type=int, help="worker processes"),
        "runs": dict(flags=["--runs"], type=int, help="independent runs"),
        "arms_subset": dict(flags=["--arms-subset"], type=_int_list, help="comma-separated arm indices to keep"),
        "population": dict(flags=["--population"], type=int, help="epidemic population size"),
        "env": dict(flags=["--env"], choices=["synthetic", "epidemic"], help="environment kind"),
        "means": dict(flags=["--means"], type=_float_list, help="synthetic arm means, comma-separated"),
        "sd": dict(flags=["--sd"], type=float, help="synthetic arm standard deviation"),
        "ground_truth": dict(flags=["--ground-truth"], type=Path, help="ground-truth JSON for metrics"),
        "snapshot_every": dict(flags=["--snapshot-every"], type=int, help="log BFTS posteriors every N steps"),
    }
    for name in names:
        spec = dict(opts[name])
        flags = spec.pop("flags")
        p.add_argument(*flags, dest=name, default=None, **spec)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mtop", description="Anytime m-top arm identification experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("enumerate", help="list the vaccine-allocation strategies (arms)")

    gt = sub.add_parser("ground-truth", help="pull every arm R times and store the true top-m")
    _add_common(gt, "config", "out", "seed", "scenario", "objective", "m", "repetitions", "parallel",
                "arms_subset", "population", "env", "means", "sd")

    run = sub.add_parser("run", help="run an exploration algorithm under a sample budget")
    _add_common(run, "config", "out", "seed", "budget", "algorithm", "scenario", "objective", "m",
                "parallel", "runs", "arms_subset", "population", "env", "means", "sd", "ground_truth",
                "snapshot_every")

    diag = sub.add_parser("diagnose", help="boundary error probabilities from a logged posterior snapshot")
    _add_common(diag, "out", "seed", "m")
    diag.add_argument("--log", dest="log_path", type=Path, required=True, help="steps NDJSON written by 'run'")
    diag.add_argument("--t", dest="t", type=int, required=True, help="step whose posterior snapshot to use")
    diag.add_argument("--n-mc", dest="n_mc", type=int, default=100_000)
    return parser


# -- settings --------------------------------------------------------------------

def resolve_settings(args) -> dict:
    """Defaults <- config file <- flags."""
    settings = copy.deepcopy(DEFAULTS)
    if getattr(args, "config", None) is not None:
        try:
            user = tomllib.loads(Path(args.config).read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        settings = _deep_merge(settings, user)
        settings["_config_dir"] = str(Path(args.config).parent)
    exp, env = settings["experiment"], settings["environment"]
    for key in ("seed", "budget", "algorithm", "m", "repetitions", "parallel", "runs", "snapshot_every"):
        value = getattr(args, key, None)
        if value is not None:
            exp[key] = value
    for key in ("scenario", "objective", "arms_subset", "population", "means", "sd"):
        value = getattr(args, key, None)
        if value is not None:
            env[key] = value
    if getattr(args, "env", None) is not None:
        env["kind"] = args.env
    elif getattr(args, "means", None) is not None:
        env["kind"] = "synthetic"
    return settings


def build_environment(settings: dict, seed: int):
    env_s = settings["environment"]
    m = int(settings["experiment"]["m"])
    kind = env_s.get("kind", "epidemic")
    subset = env_s.get("arms_subset")
    if kind == "synthetic":
        means = list(env_s.get("means") or [])
        if not means:
            raise ConfigError("synthetic environment needs 'means'")
        if subset:
            means = [means[i] for i in subset]
        return SyntheticBandit.gaussian(means, float(env_s.get("sd", 0.1)), m=m, seed=seed)
    if kind != "epidemic":
        raise ConfigError(f"unknown environment kind {kind!r}")
    tree = default_tree()
    user = settings.get("epidemic", {})
    tree = _deep_merge(tree, user)
    if "supply" in user:
        if "file" in user["supply"]:
            tree["_base_dir"] = settings.get("_config_dir", ".")
        else:
            tree["supply"].pop("file", None)
    config = build_config(tree, scenario=env_s.get("scenario", "Baseline"), population=env_s.get("population"))
    strategies = enumerate_strategies()
    if subset:
        try:
            strategies = [strategies[i] for i in subset]
        except IndexError:
            raise ConfigError(f"arms_subset indices must lie in [0, {len(strategies)})") from None
    return EpidemicBandit(config, strategies, objective=env_s.get("objective", "ari"), m=m, seed=seed)


def _resolved(settings: dict, env) -> dict:
    # worker count does not change results, so it stays out of the provenance record
    out = {k: copy.deepcopy(v) for k, v in settings.items() if not k.startswith("_")}
    out["experiment"].pop("parallel", None)
    out["environment_resolved"] = env.describe()
    return out


def _outdir(args) -> Path:
    out = args.out if args.out is not None else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands --------------------------------------------------------------------

def cmd_enumerate(args) -> int:
    lines = ["arm,code," + ",".join(AGE_GROUPS)]
    for k, s in enumerate(enumerate_strategies()):
        lines.append(f"{k},{s.code}," + ",".join(v.short for v in s.assignment))
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_ground_truth(args) -> int:
    settings = resolve_settings(args)
    exp = settings["experiment"]
    env = build_environment(settings, seed=None)
    resolved = _resolved(settings, env)
    gt = build_ground_truth(env, int(exp["repetitions"]), int(exp["seed"]), m=int(exp["m"]),
                            parallel=int(exp["parallel"]))
    path = _outdir(args) / "ground_truth.json"
    gt.save(path, extra={"config": resolved, "config_hash": stable_hash(resolved)})
    print(f"wrote {path}: K={gt.n_arms} R={gt.repetitions} j_true={list(gt.j_true)}")
    return EXIT_OK


def cmd_run(args) -> int:
    settings = resolve_settings(args)
    exp = settings["experiment"]
    algorithm = exp["algorithm"]
    env = build_environment(settings, seed=None)
    resolved = _resolved(settings, env)
    chash = stable_hash(resolved)

    gt = None
    if args.ground_truth is not None:
        gt = GroundTruth.load(args.ground_truth)
        if gt.n_arms != env.n_arms:
            raise ConfigError(f"ground truth has K={gt.n_arms}, environment has K={env.n_arms}")
        if gt.m != env.m:
            gt = GroundTruth(gt.samples, env.m, gt.env_hash, gt.seed)

    params = dict(settings.get("atlucb", {})) if algorithm == "atlucb" else None
    records = run_experiment(
        algorithm, env, int(exp["budget"]), int(exp["runs"]), int(exp["seed"]),
        ground_truth=gt, params=params, parallel=int(exp["parallel"]),
        snapshot_every=int(exp["snapshot_every"]) or None, config_hash=chash,
    )
    out = _outdir(args)
    for rec in records:
        rec.write_ndjson(out / f"records_{algorithm}_run{rec.run:03d}.ndjson", config=resolved)
        rec.write_steps(out / f"steps_{algorithm}_run{rec.run:03d}.ndjson", config=resolved)
    if gt is not None:
        aggregate(records).write_csv(out / f"aggregate_{algorithm}.csv",
                                     comment=f"config_hash={chash} config={json.dumps(resolved, sort_keys=True)}")
    summary = {
        "config": resolved,
        "config_hash": chash,
        "runs": [
            {"run": r.run, "samples_used": r.samples_used, "leftover": r.leftover,
             "n_clamped": r.n_clamped, "final_recommendation": list(r.final_recommendation),
             "final_proportion_correct": r.proportion_correct[-1] if r.proportion_correct else None}
            for r in records
        ],
    }
    (out / f"summary_{algorithm}.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
    for r in records:
        print(f"run {r.run}: {r.samples_used} samples used, leftover {r.leftover}, "
              f"recommendation {list(r.final_recommendation)}")
    return EXIT_OK


def _posterior_from_snapshot(snap: dict):
    if "values" in snap:
        return DiscretePosterior(snap["values"], snap["probs"])
    return TruncatedTPosterior.from_snapshot(snap)


def load_snapshot(path: Path, t: int) -> tuple[list, dict]:
    """Posteriors logged at step ``t`` (t-posterior statistics or discrete ``values``/``probs``)."""
    with open(path) as fh:
        header = json.loads(fh.readline())
        available = {}
        for line in fh:
            step = json.loads(line)
            if "posteriors" in step:
                available[step["t"]] = step["posteriors"]
    if t not in available:
        if not available:
            raise ConfigError(f"{path} has no posterior snapshots (run BFTS with --snapshot-every)")
        nearest = min(available, key=lambda s: (abs(s - t), s))
        raise ConfigError(f"no posterior snapshot at t={t}; nearest available is t={nearest}")
    snaps = sorted(available[t], key=lambda s: s["arm"])
    return [_posterior_from_snapshot(s) for s in snaps], header


def cmd_diagnose(args) -> int:
    posteriors, header = load_snapshot(args.log_path, args.t)
    m = args.m if args.m is not None else _m_from_log(args.log_path)
    seed = args.seed if args.seed is not None else 0
    rng = np.random.default_rng(run_seed_sequence(seed, args.t))
    report = estimate_boundary_probabilities(posteriors, m, args.n_mc, rng)
    check = check_union_bounds(report)
    out = _outdir(args) / f"boundary_report_t{args.t}.json"
    payload = {"report": report.to_dict(), "check": check.to_dict(), "source": str(args.log_path),
               "t": args.t, "seed": seed, "n_mc": args.n_mc,
               "config_hash": header.get("config_hash"), "config": header.get("config")}
    out.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
    print(f"P(J* != J^TS) = {report.p_error:.4f} +- {report.se_error:.4f}")
    print(f"union bound {report.union_sum:.4f} (margin {check.union_margin:+.4f})")
    print(f"heuristic 1: {'holds' if report.heuristic1 else 'violated'}; "
          f"(K-m) P(A_m+1 in J*) = {report.bound_below:.4f} (margin {check.below_margin:+.4f})")
    print(f"heuristic 2: {'holds' if report.heuristic2 else 'violated'}; "
          f"m P(A_m not in J*) = {report.bound_above:.4f} (margin {check.above_margin:+.4f})")
    print(f"wrote {out}")
    return EXIT_OK


def _m_from_log(path: Path) -> int:
    with open(path) as fh:
        fh.readline()
        for line in fh:
            return len(json.loads(line)["recommendation"])
    raise ConfigError(f"{path} has no steps")


COMMANDS = {
    "enumerate": cmd_enumerate,
    "ground-truth": cmd_ground_truth,
    "run": cmd_run,
    "diagnose": cmd_diagnose,
}


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(level=os.environ.get("MTOP_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, KeyError, ValueError, UsageError) as exc:
        print(f"mtop: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"mtop: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
