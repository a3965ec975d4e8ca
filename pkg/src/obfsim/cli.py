"""Command-line entry point: ``gen``, ``obfuscate``, ``evaluate``, ``props``.

Every command takes a mandatory ``--seed`` and writes its files under
``--out``. Exit codes: 0 success, 1 usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from sklearn.base import clone

from .detectors import DetectorConfigError, build_detector, describe
from .environment import EnvSpecError, ProfileUniverse
from .evaluation import (SUITES, decide_evasion, emit_report, estimate_errors,
                         result_row, run_proposition_suite)
from .obfuscators import OBFUSCATORS
from .toyvm import PopulationConfig, ProgramSet, generate_population

USAGE, RUNTIME = 1, 2

MAX_TRIALS = 1_000_000
MAX_STEPS = 10_000_000
MAX_CANDIDATES = 2**24

# Obfuscators whose keys come from an environment profile.
ENV_KEYED = {"htd_env": ("target_profile",),
             "deniable_dual": ("target_profile", "cover_profile")}
SEEDED = {"xor1", "cipher_embedded", "htd_random", "htd_env", "deniable_xor",
          "deniable_dual"}


class UsageError(Exception):
    pass


class RuntimeFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _u64(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def internal_seed(seed: int) -> int:
    """Fold a 64-bit CLI seed into the 31-bit range the generators accept."""
    state = np.random.SeedSequence(seed).generate_state(1, dtype=np.uint32)[0]
    return int(state >> 1)


def _read_json(path, what):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise RuntimeFailure(f"cannot read {what} {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise RuntimeFailure(f"{what} {path} is not valid JSON: {exc}") from None


def _json_arg(text, what):
    """Inline JSON, or a path to a JSON file."""
    if Path(text).is_file():
        return _read_json(text, what)
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise UsageError(f"{what} is neither a file nor JSON: {text!r}") from None


def _write(out, name, text):
    path = Path(out) / name
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise RuntimeFailure(f"cannot write {path}: {exc}") from None
    return path


def _load_set(path):
    try:
        return ProgramSet.from_json(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise RuntimeFailure(f"cannot read program set {path}: {exc}") from None


def _universe(spec, base_dir=None):
    if spec is None:
        return None
    if isinstance(spec, str):
        path = Path(spec)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        spec = _read_json(path, "universe")
    return ProfileUniverse.from_dict(spec)


def _check_profile(universe, profile, what):
    if not isinstance(profile, dict):
        raise RuntimeFailure(f"{what} must be a JSON object of variable -> value")
    for name, value in profile.items():
        if name not in universe.names:
            raise RuntimeFailure(f"{what} names unknown variable {name!r}")
        if value not in universe.variable(name).domain:
            raise RuntimeFailure(f"{what}: {value!r} is outside the domain of {name!r}")


def make_obfuscator(name, params, seed, universe=None, target=None):
    if name not in OBFUSCATORS:
        raise UsageError(f"unknown obfuscator {name!r}; valid: {', '.join(OBFUSCATORS)}")
    params = dict(params or {})
    for key in ENV_KEYED.get(name, ()):
        if key == "target_profile" and key not in params and target is not None:
            params[key] = target
        if key not in params:
            raise UsageError(f"{name} needs a universe and a target profile "
                             f"(--universe/--target or '{key}' in params)")
        if universe is None:
            raise UsageError(f"{name} needs --universe")
        _check_profile(universe, params[key], key)
    if name in SEEDED:
        params.setdefault("random_state", seed)
    try:
        return OBFUSCATORS[name](**params)
    except TypeError as exc:
        raise RuntimeFailure(f"bad params for {name!r}: {exc}") from None


def _check_caps(trials, detector_configs):
    if not isinstance(trials, int) or not 1 <= trials <= MAX_TRIALS:
        raise RuntimeFailure(f"trials must be an integer in [1, {MAX_TRIALS}]")

    def walk(cfg):
        budget = cfg.get("budget") or {}
        if budget.get("max_steps", 0) > MAX_STEPS:
            raise RuntimeFailure(f"max_steps above the cap of {MAX_STEPS}")
        if budget.get("max_key_candidates", 0) > MAX_CANDIDATES:
            raise RuntimeFailure(f"max_key_candidates above the cap of {MAX_CANDIDATES}")
        for sub in (cfg.get("fallback"), (cfg.get("params") or {}).get("on_exhausted")):
            if isinstance(sub, dict):
                walk(sub)

    for cfg in detector_configs:
        if not isinstance(cfg, dict):
            raise RuntimeFailure(f"detector entry must be an object: {cfg!r}")
        walk(cfg)


def _table(rows):
    head = f"{'obfuscator':<16} {'detector':<44} {'alpha':>7} {'beta':>7} " \
           f"{'alpha_O':>7} {'beta_O':>7}  verdict"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(f"{r['obfuscator'][:16]:<16} {r['detector'][:44]:<44} "
                     f"{r['alpha']:>7.4f} {r['beta']:>7.4f} {r['alpha_O']:>7.4f} "
                     f"{r['beta_O']:>7.4f}  {r['verdict']}")
    return "\n".join(lines)


def _suite_line(result):
    rows = result.get("rows")
    if result["suite"] == "P1":
        detail = "max |a+b-1| = %.4f" % max(abs(r["sum"] - 1) for r in rows)
    elif result["suite"] == "P2":
        detail = ", ".join(f"{r['obfuscator']}: a_O={r['alpha_post']:.4f} "
                           f"vs a_emp={r['alpha_emp']:.4f}" for r in rows)
    elif result["suite"] == "P3":
        detail = f"min a_O+b_O = {result['min_sum_post']:.4f}"
    else:
        detail = f"min utility fraction = {result['min_fraction']:.4f}"
    return f"{result['suite']} {'PASS' if result['pass'] else 'FAIL'}  {detail}"


# Commands

def cmd_gen(args):
    if args.config is None:
        raise UsageError("gen needs --config")
    raw = _read_json(args.config, "population config")
    try:
        pset = generate_population(PopulationConfig.from_dict(raw), internal_seed(args.seed))
    except (KeyError, TypeError) as exc:
        raise RuntimeFailure(f"bad population config: {exc}") from None
    path = _write(args.out, "programs.json", pset.to_json())
    print(f"wrote {len(pset)} programs to {path}")


def cmd_obfuscate(args):
    universe = _universe(args.universe)
    target = _json_arg(args.target, "--target") if args.target else None
    params = _json_arg(args.params, "--params") if args.params else {}
    if args.config is not None:
        params = {**_read_json(args.config, "obfuscator params"), **params}
    obf = make_obfuscator(args.obfuscator, params, internal_seed(args.seed), universe, target)
    pset = _load_set(args.programs)
    out = obf.fit(pset).transform(pset)
    path = _write(args.out, "programs.json", out.to_json())
    print(f"wrote {len(out)} {args.obfuscator}-obfuscated programs to {path}")


def _config_population(cfg, base_dir, seed):
    if "programs" in cfg:
        path = Path(cfg["programs"])
        return _load_set(path if path.is_absolute() else Path(base_dir) / path)
    if "population" in cfg:
        return generate_population(PopulationConfig.from_dict(cfg["population"]), seed)
    raise RuntimeFailure("experiment config needs 'population' or 'programs'")


def run_experiment(cfg, seed, base_dir="."):
    """Execute the obfuscator x detector matrix; returns report rows."""
    detectors = cfg.get("detectors")
    if not detectors:
        raise RuntimeFailure("experiment config has an empty detector list")
    trials = cfg.get("trials", 10_000)
    _check_caps(trials, detectors)
    universe = _universe(cfg.get("universe"), base_dir)
    target = cfg.get("target")
    pset = _config_population(cfg, base_dir, seed)
    built = [build_detector(d, universe) for d in detectors]
    fitted = [clone(d).fit(pset) for d in built]
    pre = [estimate_errors(d, pset, trials, seed) for d in fitted]
    rows = []
    for entry in cfg.get("obfuscators") or [{"type": "identity"}]:
        name = entry.get("type")
        obf = make_obfuscator(name, entry.get("params"), seed, universe, target)
        oset = obf.fit(pset).transform(pset)
        for det, before in zip(fitted, pre):
            verdict = decide_evasion(before, estimate_errors(det, oset, trials, seed))
            rows.append(result_row(name, describe(det), verdict, seed))
    return rows


def cmd_evaluate(args):
    if args.config is None:
        raise UsageError("evaluate needs --config")
    cfg = _read_json(args.config, "experiment config")
    if not isinstance(cfg, dict):
        raise RuntimeFailure("experiment config must be a JSON object")
    seed = internal_seed(args.seed)
    base_dir = Path(args.config).parent
    if "suite" in cfg:
        which = cfg["suite"]
        which = list(SUITES) if which == "all" else ([which] if isinstance(which, str) else which)
        _run_suites(which, cfg.get("suite_config") or {}, seed, args.out)
        if not cfg.get("detectors"):
            return
    rows = run_experiment(cfg, seed, base_dir)
    for row in rows:
        row["seed"] = args.seed
    json_path, csv_path = emit_report(rows, args.out)
    print(_table(rows))
    print(f"wrote {json_path} and {csv_path}")


def _run_suites(which, configs, seed, out):
    bad = [w for w in which if w not in SUITES]
    if bad:
        raise UsageError(f"unknown suite {bad[0]!r}; valid: {', '.join(SUITES)}, all")
    for w in which:
        result = run_proposition_suite(w, configs.get(w), seed)
        _write(out, f"props_{w}.json", json.dumps(result, indent=1, sort_keys=True) + "\n")
        print(_suite_line(result))


def cmd_props(args):
    configs = _read_json(args.config, "suite config") if args.config else {}
    which = list(SUITES) if args.which == "all" else [args.which]
    _run_suites(which, configs, internal_seed(args.seed), args.out)


def build_parser():
    parser = _Parser(prog="obfsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--seed", type=_u64, required=True)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", help="JSON config file")

    p = sub.add_parser("gen", help="generate a labeled program set")
    common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("obfuscate", help="apply one obfuscator to a program set")
    p.add_argument("programs", help="program-set JSON file")
    p.add_argument("--obfuscator", required=True)
    p.add_argument("--params", help="JSON object or file of obfuscator params")
    p.add_argument("--universe", help="profile universe JSON file")
    p.add_argument("--target", help="target profile, JSON object or file")
    common(p)
    p.set_defaults(func=cmd_obfuscate)

    p = sub.add_parser("evaluate", help="run an obfuscator x detector matrix")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("props", help="run a proposition reproduction suite")
    p.add_argument("which", choices=[*SUITES, "all"])
    common(p)
    p.set_defaults(func=cmd_props)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (RuntimeFailure, OSError, ValueError, DetectorConfigError, EnvSpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
