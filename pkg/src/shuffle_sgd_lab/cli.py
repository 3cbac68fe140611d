"""Command-line entry point.

Subcommands: build, run, sweep, verify, figure.  Exit codes: 0 on success
or a passing check, 1 when a bound check fails, 2 for usage or
specification errors.  Error reasons go to stderr on lines starting with
``error:``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .bench import (
    EXPLICIT_UPPER,
    LOWER_POINTS,
    QUICK_LOWER_POINTS,
    REPORT_SCHEMA,
    AssumptionRefusal,
    CoverageError,
    SweepSpec,
    default_grid,
    default_upper_instance,
    lower_bound_check,
    reproduce_fig_gap_comparison,
    reproduce_fig_trajectory,
    upper_bound_check,
)
from .constructions import ConstructionSpec, SpecError, build
from .quadratic import ProblemError, problem_from_dict, problem_to_dict
from .serialize import dumps, fmt_float, write_text
from .shufflers import (
    LOWER_BOUND_THEOREMS,
    UPPER_BOUND_THEOREMS,
    RunConfig,
    ShuffleStrategy,
    herding_at_opt_strategy,
    recommended_step_size,
    run,
)


ALL_THEOREMS = LOWER_BOUND_THEOREMS + UPPER_BOUND_THEOREMS


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# argument helpers


def _add_construction_args(p):
    p.add_argument("--theorem", help="theorem id")
    p.add_argument("--n", type=int, help="number of components")
    p.add_argument("--kappa", type=float, help="condition number L/mu")
    p.add_argument("--K", type=int, help="number of epochs")
    p.add_argument("--G", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--D", type=float, default=None, help="initial distance (small-lb-concave)")


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _spec_from_args(args) -> ConstructionSpec:
    _need(args, "theorem", "n", "kappa", "K")
    if args.theorem not in LOWER_BOUND_THEOREMS:
        raise UsageError(f"--theorem must be a construction id ({', '.join(LOWER_BOUND_THEOREMS)}), got {args.theorem!r}")
    spec = ConstructionSpec(args.theorem, args.n, args.kappa, args.K, args.G, args.mu, args.D)
    spec.validate()
    return spec


def _parse_strategy(text: str, seed: int, problem=None) -> ShuffleStrategy:
    name, _, rest = text.partition(":")
    if name == "igd":
        return ShuffleStrategy.igd()
    if name == "rr":
        return ShuffleStrategy.random_reshuffle(seed)
    if name == "ss":
        return ShuffleStrategy.single_shuffle(seed)
    if name == "wr":
        return ShuffleStrategy.with_replacement(seed)
    if name == "fixed":
        if not rest:
            raise UsageError("fixed strategy needs a permutation, e.g. fixed:2,0,1")
        return ShuffleStrategy.fixed([int(v) for v in rest.split(",")])
    if name == "herding":
        if problem is None:
            raise UsageError("herding strategy needs a problem")
        return herding_at_opt_strategy(problem)
    raise UsageError(f"unknown strategy {text!r}; use igd, rr, ss, wr, herding or fixed:<perm>")


def _parse_vector(text: str):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"cannot parse vector {text!r}") from exc


def _load_problem(path: str):
    """Problem and optional x0 from a problem JSON or a bundle JSON."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read problem file {path!r}: {exc}") from exc
    x0 = None
    if "problem" in doc:
        x0 = np.array(doc.get("x0"), dtype=float) if doc.get("x0") is not None else None
        doc = doc["problem"]
    return problem_from_dict(doc), x0


def _problem_and_x0(args):
    if getattr(args, "problem", None):
        problem, x0 = _load_problem(args.problem)
    else:
        bundle = build(_spec_from_args(args))
        problem, x0 = bundle.problem, bundle.x0
    if getattr(args, "x0", None):
        x0 = _parse_vector(args.x0)
    if x0 is None:
        x0 = np.zeros(problem.d)
    return problem, x0


def _eta_value(text: str, problem, strategy, K: int, x0) -> float:
    if not text.startswith("auto:"):
        try:
            return float(text)
        except ValueError as exc:
            raise UsageError(f"--eta must be a number or auto:<theorem>, got {text!r}") from exc
    theorem = text[len("auto:") :]
    if theorem not in ALL_THEOREMS:
        raise UsageError(f"unknown theorem in --eta {text!r}")
    params = {
        "mu": problem.mu,
        "L": problem.ell,
        "n": problem.n,
        "K": K,
        "G": problem.grad_error_G if theorem == "large-ub-generalizedgrad" else problem.grad_at_opt_Gstar,
        "dist": float(np.linalg.norm(x0 - problem.minimizer)),
    }
    if theorem == "large-ub-generalizedgrad":
        from .quadratic import optimality_gap

        params["gap0"] = optimality_gap(problem, x0)
    if theorem == "herding-at-opt":
        h = strategy if strategy.h_achieved is not None else herding_at_opt_strategy(problem)
        params["H"] = h.h_achieved
    return recommended_step_size(theorem, params)


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        write_text(out, text)


def _header(pairs: dict) -> str:
    return "".join(f"# {k}={v}\n" for k, v in pairs.items())


# ---------------------------------------------------------------------------
# subcommands


def cmd_build(args) -> int:
    spec = _spec_from_args(args)
    bundle = build(spec)
    doc = bundle.to_dict()
    doc = {"schema": "shuffle-sgd-lab/bundle/v1", **doc, "problem": problem_to_dict(bundle.problem)}
    _emit(dumps(doc), args.out)
    if args.problem_out:
        write_text(args.problem_out, dumps(problem_to_dict(bundle.problem)))
    print(f"analytic_lower_bound={fmt_float(bundle.analytic_lower_bound)}", file=sys.stderr if args.out == "-" else sys.stdout)
    return 0


def cmd_run(args) -> int:
    _need(args, "K", "eta")
    problem, x0 = _problem_and_x0(args)
    strategy = _parse_strategy(args.strategy, args.seed, problem)
    eta = _eta_value(args.eta, problem, strategy, args.K, x0)
    rec = run(problem, strategy, RunConfig(eta, args.K, x0))
    if args.format == "csv":
        text = _header({"strategy": strategy.label(), "seed": args.seed, "eta": fmt_float(eta), "K": args.K}) + rec.to_csv()
    else:
        text = dumps(
            {
                "schema": "shuffle-sgd-lab/run/v1",
                "strategy": strategy.label(),
                "seed": args.seed,
                "eta": eta,
                "K": args.K,
                "status": rec.status,
                "final": rec.final,
                "final_gap": rec.final_gap,
                "gaps": rec.gaps,
            }
        )
    _emit(text, args.out)
    return 0


def cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    bundle = build(spec)
    grid = default_grid(bundle.regime_intervals, per_interval=args.per_interval)
    report = lower_bound_check(spec.theorem_id, spec, SweepSpec(grid, (spec.K,)))
    text = report.to_csv() if args.format == "csv" else report.to_json()
    _emit(text, args.out)
    return 0


def _verify_one(theorem: str, args, quick: bool):
    if theorem in LOWER_BOUND_THEOREMS:
        if args.n is not None or args.kappa is not None or args.K is not None:
            args.theorem = theorem
            spec = _spec_from_args(args)
        else:
            spec = (QUICK_LOWER_POINTS if quick else LOWER_POINTS)[theorem]
        return lower_bound_check(theorem, spec)
    if theorem not in EXPLICIT_UPPER:
        raise AssumptionRefusal("explicit constants", f"{theorem} is stated only up to unspecified constants")
    if args.problem:
        problem, x0 = _problem_and_x0(args)
        _need(args, "K")
        default = "herding" if theorem == "herding-at-opt" else "igd"
        strategy = _parse_strategy(args.strategy or default, args.seed, problem)
        return upper_bound_check(theorem, problem, strategy, {"K": args.K, "x0": x0})
    inst = default_upper_instance(theorem, quick)
    return upper_bound_check(theorem, inst.problem, inst.strategy, {"K": inst.K, "x0": inst.x0})


def cmd_verify(args) -> int:
    if args.all:
        t0 = time.perf_counter()
        reports, skipped = [], []
        for theorem in ALL_THEOREMS:
            if theorem in UPPER_BOUND_THEOREMS and theorem not in EXPLICIT_UPPER:
                skipped.append({"theorem": theorem, "reason": "stated without explicit constants"})
                continue
            reports.append(_verify_one(theorem, args, args.quick))
        elapsed = time.perf_counter() - t0
        ok = all(r.passed for r in reports)
        if args.format == "csv":
            lines = ["theorem,kind,measured,bound,margin,pass"]
            for r in reports:
                lines.append(
                    f"{r.theorem_id},{r.kind},{fmt_float(r.measured_inf_gap)},{fmt_float(r.analytic_bound)},"
                    f"{fmt_float(r.margin)},{'true' if r.passed else 'false'}"
                )
            text = "\n".join(lines) + "\n"
        else:
            text = dumps(
                {
                    "schema": REPORT_SCHEMA,
                    "profile": "quick" if args.quick else "default",
                    "pass": ok,
                    "skipped": skipped,
                    "reports": [r.to_dict() for r in reports],
                }
            )
        _emit(text, args.out)
        for r in reports:
            print(f"{'PASS' if r.passed else 'FAIL'} {r.theorem_id} margin={r.margin:.3g}", file=sys.stderr)
        print(f"elapsed {elapsed:.2f}s", file=sys.stderr)
        return 0 if ok else 1
    _need(args, "theorem")
    if args.theorem not in ALL_THEOREMS:
        raise UsageError(f"unknown theorem id {args.theorem!r}")
    report = _verify_one(args.theorem, args, args.quick)
    text = report.to_csv() if args.format == "csv" else report.to_json()
    _emit(text, args.out)
    if not report.passed:
        print(
            f"error: bound check failed for {report.theorem_id}: measured {fmt_float(report.measured_inf_gap)}, "
            f"bound {fmt_float(report.analytic_bound)}",
            file=sys.stderr,
        )
        return 1
    return 0


def cmd_figure(args) -> int:
    if args.which == "trajectory":
        K = 20 if args.K is None else args.K
        n = 1000 if args.n is None else args.n
        kappa = 1e4 if args.kappa is None else args.kappa
        spec = ConstructionSpec("small-lb-sc", n, kappa, K, args.G, args.mu)
        body = reproduce_fig_trajectory(spec, start=args.start)
        head = _header({"figure": "trajectory", "n": n, "kappa": fmt_float(kappa), "K": K, "start": args.start})
        out = args.out or "trajectory.csv"
    else:
        n = 100 if args.n is None else args.n
        kappa = 1e4 if args.kappa is None else args.kappa
        spec = ConstructionSpec("small-lb-concave", n, kappa, 1, args.G, args.mu, D=1.0)
        K_list = None if args.K_list is None else [int(v) for v in args.K_list.split(",")]
        body = reproduce_fig_gap_comparison(spec, seeds=args.seeds, K_list=K_list)
        head = ""
        out = args.out or "gap_comparison.csv"
    _emit(head + body, out)
    return 0


# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shuffle-sgd-lab", description="Permutation-based SGD bound checks on quadratic instances.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("build", help="build a lower-bound construction")
    _add_construction_args(p)
    p.add_argument("--out", default="bundle.json")
    p.add_argument("--problem-out", default=None)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("run", help="run permutation-based SGD on a problem")
    _add_construction_args(p)
    p.add_argument("--problem", default=None, help="problem or bundle JSON")
    p.add_argument("--strategy", default="igd")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eta", default=None, help="step size, or auto:<theorem>")
    p.add_argument("--x0", default=None, help="comma-separated start point")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="IGD final gap over the default step-size grid")
    _add_construction_args(p)
    p.add_argument("--per-interval", type=int, default=20)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="check a lower or upper bound")
    _add_construction_args(p)
    p.add_argument("--all", action="store_true", help="every theorem at its default point")
    p.add_argument("--quick", action="store_true", help="smaller parameter points")
    p.add_argument("--problem", default=None, help="problem JSON for upper-bound checks")
    p.add_argument("--strategy", default=None, help="default: herding for herding-at-opt, igd otherwise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x0", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default="report.json")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("figure", help="reproduce a synthetic experiment as CSV")
    p.add_argument("which", choices=("trajectory", "gap-comparison"))
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--K-list", default=None, help="comma-separated K values (gap-comparison)")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--G", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--start", choices=("origin", "polygon"), default="origin")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_figure)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: build, run, sweep, verify or figure")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AssumptionRefusal as exc:
        print(f"error: refused: assumption '{exc.assumption}' not satisfied", file=sys.stderr)
        print(f"error: {exc.detail}", file=sys.stderr)
        return 2
    except (SpecError, CoverageError, ProblemError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
