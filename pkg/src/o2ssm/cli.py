"""Command line entry point: ``o2ssm {run,sweep,opt,guarantees}``."""

from __future__ import annotations

import argparse
import sys

from . import guarantees, harness
from .oracle import Mode, OracleConfig, offline_opt_fractional, offline_opt_integral

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

# keys a TOML config may set, with the ExperimentConfig field they map to
CONFIG_KEYS = {
    "instance": "instance",
    "gen_seed": "gen_seed",
    "algo": "algos",
    "algos": "algos",
    "eta": "eta",
    "etas": "etas",
    "repeats": "repeats",
    "seed": "seed",
    "out": "out",
    "timing": "timing",
    "last": "last",
    "lp_method": "lp_method",
    "workers": "workers",
}


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="TOML file whose keys mirror the flags; flags win")
    p.add_argument("--instance", help="generator name (coverage, teamformation, influence, random) or JSON path")
    p.add_argument("--gen-seed", type=int, dest="gen_seed")
    p.add_argument("--algo", action="append", dest="algos", choices=harness.ALGORITHMS)
    p.add_argument("--eta", type=float)
    p.add_argument("--repeats", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--timing", action="store_true", default=None, help="fill the step_ms column")
    p.add_argument("--oracle", choices=[m.value for m in Mode], default=None)
    p.add_argument("--exact-budget", type=int, dest="exact_budget")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="o2ssm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run algorithms and write per-step and summary CSV")
    _add_common(p)

    p = sub.add_parser("sweep", help="run every algorithm over a list of learning rates")
    _add_common(p)
    p.add_argument("--etas", type=_floats, default=None, help="comma separated, e.g. 1e-4,1e-3,1e-2")

    p = sub.add_parser("opt", help="offline optimum in hindsight (average per step)")
    p.add_argument("--instance", required=True)
    p.add_argument("--gen-seed", type=int, dest="gen_seed", default=0)
    p.add_argument("--fractional", action="store_true", help="joint relaxation upper bound instead of enumeration")
    p.add_argument("--exact-budget", type=int, dest="exact_budget", default=2_000_000)

    p = sub.add_parser("guarantees", help="print approximation constants")
    p.add_argument("--k", type=int, action="append", help="uniform rank (repeatable); default 1,2,3,5,10")
    return parser


def make_config(args: argparse.Namespace) -> harness.ExperimentConfig:
    values: dict = {}
    if args.config:
        with open(args.config, "rb") as fh:
            raw = tomllib.load(fh)
        unknown = sorted(set(raw) - set(CONFIG_KEYS) - {"oracle", "exact_budget"})
        if unknown:
            raise ValueError(f"{args.config}: unknown key(s) {unknown}")
        for key, dest in CONFIG_KEYS.items():
            if key in raw:
                values[dest] = [raw[key]] if key == "algo" and isinstance(raw[key], str) else raw[key]
        oracle = raw.get("oracle", {})
        if isinstance(oracle, str):
            oracle = {"mode": oracle}
        if "exact_budget" in raw:
            oracle["exact_budget"] = raw["exact_budget"]
        if oracle:
            values["oracle"] = OracleConfig(**oracle)
    for dest in ("instance", "gen_seed", "algos", "eta", "repeats", "seed", "out", "timing"):
        v = getattr(args, dest, None)
        if v is not None:
            values[dest] = v
    if args.oracle or args.exact_budget:
        base = values.get("oracle", OracleConfig())
        values["oracle"] = OracleConfig(args.oracle or base.mode, args.exact_budget or base.exact_budget)
    return harness.ExperimentConfig(**values)


def _print_rows(rows, cols, out=None):
    out = out or sys.stdout
    print("\t".join(cols), file=out)
    for r in rows:
        print("\t".join(harness._fmt(r[c]) for c in cols), file=out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "guarantees":
        ks = args.k or [1, 2, 3, 5, 10]
        for row in guarantees.table(ks):
            print(f"{row['matroid']:<16} c_M={row['c_M']:.6f}  alpha={row['alpha']:.6f}")
        print(f"{'reference':<16} matroid state of the art={guarantees.MATROID_REFERENCE:.6f}")
        return 0
    if args.command == "opt":
        inst = harness.ExperimentConfig(instance=args.instance, gen_seed=args.gen_seed).load()
        w = inst.multiplicities()
        if args.fractional:
            value = offline_opt_fractional(inst.pool, inst.matroid, inst.n, inst.ell, w)
            print(f"fractional upper bound (per step): {float(value)!r}")
        else:
            cfg = OracleConfig(Mode.EXACT, args.exact_budget)
            value, x = offline_opt_integral(inst.pool, inst.matroid, inst.n, inst.ell, cfg, w)
            print(f"integral optimum (per step): {float(value)!r}")
            print("set: " + " ".join(str(i) for i in x.nonzero()[0]))
        return 0

    cfg = make_config(args)
    if args.command == "run":
        records, paths = harness.run(cfg)
        rows = harness.summarize(records)
    else:
        etas = args.etas
        if etas is None:
            etas = [1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0]
        rows, paths = harness.sweep(cfg, etas)
    _print_rows(rows, harness.SUMMARY_COLUMNS + (["best"] if args.command == "sweep" else []))
    bad = [r for r in (records if args.command == "run" else []) if not r.valid]
    for r in bad:
        print(f"warning: {r.run_id} stopped early ({r.error})", file=sys.stderr)
    print(f"wrote {paths['runs']} and {paths['summary']}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
