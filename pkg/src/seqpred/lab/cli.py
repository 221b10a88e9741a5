"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 a claim verdict failed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from ..core import BudgetExceededError, InputError
from ..divergence import (
    DivergenceSeries,
    d_inf_markov_bound,
    d_inf_markov_envelope,
    d_inf_series,
    exact_dn_series,
    mc_dn_series,
    tv_conditional,
    tv_dichotomy_trajectories,
)
from ..predictors import (
    adversary_sequence,
    build_cover_construction,
    check_ext,
    check_greedy,
    check_markov_mass,
    mixture,
)
from ..specs import MINI_LANGUAGE, parse_measure
from .experiments import REGISTRY, run_experiment
from .output import atomic_write, write_result

EXIT_OK, EXIT_USAGE, EXIT_VERDICT = 0, 1, 2
OUT_ENV = "SEQPRED_OUT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _globals(p: argparse.ArgumentParser) -> None:
    # defaults are resolved later so that a config file can sit between flags and built-ins
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    g.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or none)")
    g.add_argument("--format", choices=["csv", "json"], default=None, help="series format")
    g.add_argument("--budget", type=int, default=None,
                   help="log2 of the largest exact enumeration (default 24)")
    g.add_argument("--jobs", type=int, default=None, help="parallel series (default 1)")
    g.add_argument("--config", default=None, help="JSON file of option defaults")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="seqpred", description="Sequence-prediction measures, predictors and "
                "divergence evaluators.", epilog=MINI_LANGUAGE,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name, help_):
        c = sub.add_parser(name, help=help_, epilog=MINI_LANGUAGE,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        _globals(c)
        return c

    c = cmd("eval-dn", "expected cumulative KL divergence d_n(mu, rho)")
    c.add_argument("--mu", required=True)
    c.add_argument("--rho", required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--horizons", default=None, help="comma-separated horizons (default: n)")
    c.add_argument("--mode", choices=["exact", "mc", "auto"], default="auto")
    c.add_argument("--form", choices=["product", "conditional"], default="product")
    c.add_argument("--samples", type=int, default=1000)
    c.add_argument("--estimator", choices=["conditional", "joint"], default="conditional")

    c = cmd("eval-tv", "conditional total variation over h-step cylinders")
    c.add_argument("--mu", required=True)
    c.add_argument("--rho", required=True)
    c.add_argument("--history", default="")
    c.add_argument("--h", type=int, default=8)
    c.add_argument("--dichotomy", type=int, default=None, metavar="N",
                   help="follow sampled paths of mu to length N and classify")
    c.add_argument("--trajectories", type=int, default=200)

    c = cmd("eval-dinf", "finite-n d_inf distance")
    c.add_argument("--mu", required=True)
    c.add_argument("--rho", required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--markov-bound", action="store_true",
                   help="also print the block bound and the per-transition envelope")

    c = cmd("adversary", "greedy worst-case sequence for a predictor")
    c.add_argument("--rho", required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--symbols", default=None, help="restrict the choice to these symbols")

    c = cmd("build-mixture", "emit the JSON spec of a mixture")
    c.add_argument("components", nargs="+")
    c.add_argument("--weights", default=None, help="comma-separated weights (default uniform)")

    c = cmd("cover-construct", "run the greedy cover construction and emit its audit")
    c.add_argument("pool", nargs="+")
    c.add_argument("--rho", default=None, help="reference measure (default: uniform pool mixture)")
    c.add_argument("--horizon", type=int, default=8)
    c.add_argument("--scheme", choices=["inverse-square", "geometric"], default="inverse-square")

    c = cmd("experiment", "run a named experiment")
    c.add_argument("name")
    c.add_argument("--param", action="append", default=[], metavar="KEY=JSON",
                   help="override an experiment parameter")

    cmd("list", "list experiments")
    return p


def _resolve(args) -> dict:
    conf = {}
    if args.config:
        try:
            conf = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {args.config}: {e}")
        if not isinstance(conf, dict):
            raise UsageError("config must be a JSON object")

    def pick(key, default):
        v = getattr(args, key)
        return v if v is not None else conf.get(key, default)

    return {"seed": int(pick("seed", 0)),
            "out": pick("out", os.environ.get(OUT_ENV)),
            "format": pick("format", "csv"),
            "budget": int(pick("budget", 24)),
            "jobs": int(pick("jobs", 1)),
            "params": conf.get("params", {})}


def _emit_series(s: DivergenceSeries, opts, name: str) -> None:
    text = s.to_csv() if opts["format"] == "csv" else s.to_json() + "\n"
    sys.stdout.write(text)
    if opts["out"]:
        ext = "csv" if opts["format"] == "csv" else "json"
        atomic_write(Path(opts["out"]) / f"{name}.{ext}", text)


def _emit_json(obj, opts, name: str) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if opts["out"]:
        atomic_write(Path(opts["out"]) / f"{name}.json", text)


def _eval_dn(args, opts):
    mu, rho = parse_measure(args.mu), parse_measure(args.rho)
    horizons = [int(h) for h in args.horizons.split(",")] if args.horizons else [args.n]
    mode = args.mode
    if mode == "auto":
        mode = "exact" if len(mu.alphabet) ** max(horizons) <= 2 ** opts["budget"] else "mc"
    if mode == "exact":
        s = exact_dn_series(mu, rho, horizons, args.form, opts["budget"])
    else:
        s = mc_dn_series(mu, rho, horizons, args.samples, opts["seed"], args.estimator,
                         jobs=opts["jobs"])
    _emit_series(s, opts, "eval-dn")
    if s.witness:
        print(f"# infinite: rho is null on {s.witness!r}", file=sys.stderr)
    return EXIT_OK


def _eval_tv(args, opts):
    mu, rho = parse_measure(args.mu), parse_measure(args.rho)
    if args.dichotomy is None:
        v = tv_conditional(mu, rho, args.history, args.h, opts["budget"])
        _emit_json({"history": args.history, "h": args.h, "tv": v}, opts, "eval-tv")
        return EXIT_OK
    r = tv_dichotomy_trajectories(mu, rho, args.dichotomy, args.h, args.trajectories,
                                  opts["seed"], budget=opts["budget"])
    _emit_json(r.to_dict(), opts, "eval-tv")
    return EXIT_OK


def _eval_dinf(args, opts):
    mu, rho = parse_measure(args.mu), parse_measure(args.rho)
    vals, witness = d_inf_series(mu, rho, args.n, opts["budget"])
    out = {"n": args.n, "d_inf": vals[-1] if math.isfinite(vals[-1]) else "inf",
           "witness": witness}
    if args.markov_bound:
        out["markov_block_bound"] = d_inf_markov_bound(mu, rho)
        out["markov_envelope"] = d_inf_markov_envelope(mu, rho, args.n)
    _emit_json(out, opts, "eval-dinf")
    return EXIT_OK


def _adversary(args, opts):
    rho = parse_measure(args.rho)
    allowed = None
    if args.symbols:
        allowed = [rho.alphabet.index(c) for c in args.symbols]
    adv = adversary_sequence(rho, args.n, allowed)
    dn = adv.dn()
    s = DivergenceSeries(list(range(1, args.n + 1)), [float(v) for v in dn], "exact",
                         label="adversary")
    print(f"# sequence: {adv.text()}", file=sys.stderr)
    if opts["format"] == "json":
        _emit_json({"sequence": adv.text(), "d_n": float(dn[-1]), "series": s.to_dict()},
                   opts, "adversary")
    else:
        _emit_series(s, opts, "adversary")
    return EXIT_OK


def _build_mixture(args, opts):
    comps = [parse_measure(c) for c in args.components]
    weights = [float(w) for w in args.weights.split(",")] if args.weights else None
    nu = mixture(comps, weights)
    _emit_json(nu.to_spec(), opts, "mixture")
    return EXIT_OK


def _cover(args, opts):
    pool = [parse_measure(c) for c in args.pool]
    rho = parse_measure(args.rho) if args.rho else mixture(pool)
    cc = build_cover_construction(pool, rho, args.horizon, scheme=args.scheme,
                                  budget=opts["budget"])
    audit = cc.audit()
    audit["checks"] = {"markov_mass": all(r["ok"] for r in check_markov_mass(cc)),
                       "ext": all(r["ok"] for r in check_ext(cc)),
                       "greedy": all(r["ok"] for r in check_greedy(cc))}
    _emit_json(audit, opts, "cover-audit")
    return EXIT_OK if all(audit["checks"].values()) else EXIT_VERDICT


def _experiment(args, opts):
    params = dict(opts["params"].get(args.name, {})) if isinstance(opts["params"], dict) else {}
    for item in args.param:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects KEY=JSON, got {item!r}")
        try:
            params[key] = json.loads(val)
        except json.JSONDecodeError:
            params[key] = val
    res = run_experiment(args.name, opts["seed"], params, opts["budget"], opts["jobs"])
    asserted = [v for v in res.verdicts if not v.get("informational")]
    failed = [v for v in asserted if not v["holds"]]
    info = len(res.verdicts) - len(asserted)
    if opts["out"]:
        paths = write_result(res, Path(opts["out"]), opts["format"])
        print(f"wrote {len(paths)} files to {Path(opts['out']) / args.name}")
    print(f"{args.name}: {len(asserted) - len(failed)}/{len(asserted)} verdicts hold, "
          f"{info} informational ({res.seconds:.1f}s)")
    if res.scope:
        print(f"scope: {res.scope}")
    for v in failed:
        print(f"FAIL {v['claim']} n={v['n']} lhs={v['lhs']} rhs={v['rhs']}")
    return EXIT_VERDICT if failed else EXIT_OK


def _list(args, opts):
    for name, exp in REGISTRY.items():
        print(f"{name:26s} {exp.summary}")
    return EXIT_OK


HANDLERS = {"eval-dn": _eval_dn, "eval-tv": _eval_tv, "eval-dinf": _eval_dinf,
            "adversary": _adversary, "build-mixture": _build_mixture,
            "cover-construct": _cover, "experiment": _experiment, "list": _list}


def cli(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        opts = _resolve(args)
        return HANDLERS[args.command](args, opts)
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except UsageError as e:
        print(f"seqpred: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, BudgetExceededError) as e:
        print(f"seqpred: error: {e}", file=sys.stderr)
        if "unknown experiment" in str(e):
            print("available: " + ", ".join(REGISTRY), file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(cli())
