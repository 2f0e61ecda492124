"""``moralrl`` command line: cause queries, training, evaluation, reproduction.

Exit codes: 0 success, 1 a query with no answer (the formula is false or has
no actual cause), 2 invalid input (parse, validation or config errors).
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace

from . import __version__
from .causes import enumerate_actual_causes
from .config import ConfigError, default_config_path, load_config
from .dsl import ParseError, load_model, parse_context, parse_formula
from .scm import SCMError, evaluate, holds

EXIT_OK, EXIT_NO_ANSWER, EXIT_INVALID = 0, 1, 2


def _fmt_assign(pairs) -> str:
    return ", ".join(f"{k}={v}" for k, v in pairs)


def _report(source: str, err: ParseError) -> None:
    for d in err.diagnostics:
        print(f"{source}:{d}", file=sys.stderr)


def cmd_causes(args) -> int:
    try:
        model = load_model(args.model)
    except OSError as err:
        print(f"error: cannot read {args.model}: {err.strerror}", file=sys.stderr)
        return EXIT_INVALID
    except ParseError as err:
        _report(args.model, err)
        return EXIT_INVALID
    try:
        context = parse_context(args.context, model)
    except ParseError as err:
        _report("<context>", err)
        return EXIT_INVALID
    try:
        formula = parse_formula(args.phi, model)
    except ParseError as err:
        _report("<phi>", err)
        return EXIT_INVALID
    if formula.interventions:
        print("<phi>:1:1: error: the queried outcome cannot carry interventions", file=sys.stderr)
        return EXIT_INVALID
    phi = formula.body
    try:
        actual = evaluate(model, context)
        if not holds(phi, actual):
            print(f"{args.phi} does not hold in context {args.context}", file=sys.stderr)
            return EXIT_NO_ANSWER
        found = enumerate_actual_causes(model, context, phi, args.max_conjuncts)
    except SCMError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    if args.csv:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["cause", "W", "w", "x_prime", "Z"])
        for cause, wit in found:
            w.writerow([
                "&".join(str(e) for e in cause),
                " ".join(wit.W),
                " ".join(f"{k}={v}" for k, v in wit.w),
                " ".join(f"{k}={v}" for k, v in wit.x_prime),
                " ".join(wit.Z),
            ])
    else:
        print(f"{args.phi} holds in context {_fmt_assign(context.items())}")
        print(f"actual causes ({len(found)}):")
        for cause, wit in found:
            label = " & ".join(str(e) for e in cause)
            print(f"  {label:<12} witness W={{{_fmt_assign(wit.w)}}} x'={{{_fmt_assign(wit.x_prime)}}}")
    if not found:
        print("no actual cause found", file=sys.stderr)
        return EXIT_NO_ANSWER
    return EXIT_OK


def _config(args):
    overrides = {
        "seed": args.seed,
        "out": args.out,
        "restarts": getattr(args, "restarts", None),
        "episodes": getattr(args, "episodes", None),
        "workers": getattr(args, "workers", None),
        "eval_epsilon": getattr(args, "eval_epsilon", None),
        "max_conjuncts": getattr(args, "max_conjuncts", None),
    }
    path = args.config if args.config is not None else default_config_path()
    return load_config(path, **overrides)


def cmd_train(args) -> int:
    from . import experiments

    cfg = _config(args)
    if args.p_a is not None:
        cfg = replace(cfg, environment=replace(cfg.environment, p_A=args.p_a))
    results = experiments.train(cfg, args.agent)
    rows = [(r.restart, *experiments.summarize(r.eval_returns)) for r in results]
    mean, sem, n = experiments.summarize(m for _, m, _, _ in rows)
    print(f"trained {n} {args.agent} agent(s) at {experiments.condition_label(cfg.environment.p_A)}; "
          f"evaluation return {mean:.3f} +- {sem:.3f}")
    print(f"artifacts written to {cfg.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from . import experiments

    rows = experiments.evaluate_run(args.run_dir, args.episodes, args.eval_epsilon or 0.0, args.seed)
    if args.csv:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["condition", "agent", "restart", "mean", "sem", "n"])
        w.writerows((c, a, r, f"{m:.6f}", f"{s:.6f}", n) for c, a, r, m, s, n in rows)
        return EXIT_OK
    groups: dict = {}
    for c, a, _, m, _, _ in rows:
        groups.setdefault((c, a), []).append(m)
    for (c, a), means in groups.items():
        mean, sem, n = experiments.summarize(means)
        print(f"{c:<9} {a:<3} {mean:9.3f} +- {sem:.3f}  (n={n})")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    from . import experiments

    cfg = _config(args)
    t = experiments.reproduce(cfg, plot=args.plot, keep_runs=args.keep_runs)
    print("table1.csv: evaluation return (mean +- SEM over restarts)")
    for c, a, m, s, n in t["table1"]:
        print(f"  {c:<9} {experiments.AGENT_NAMES[a]:<9} {m:9.3f} +- {s:.3f}  (n={n})")
    print("table2.csv: blame of each actual cause of the fire")
    for c, k, m, s, n in t["table2"]:
        print(f"  {c:<9} {k:<9} {m:9.3f} +- {s:.3f}  (n={n})")
    print(f"Convergence: mean raw return over the last {cfg.trace_window} training episodes")
    for c, a, m, s, n in t["convergence"]:
        print(f"  {c:<9} {experiments.AGENT_NAMES[a]:<9} {m:9.3f} +- {s:.3f}")
    print(f"invariant checks passed: {t['invariant_checks']}")
    print(f"tables written to {cfg.out}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    from . import experiments

    print(experiments.inspect_run(args.run_dir, args.restart))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="moralrl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("causes", help="list the actual causes of a formula in a context")
    p.add_argument("model", help="path to a .scm model file")
    p.add_argument("context", help="exogenous assignment, e.g. 'U_A=2,U_P=1'")
    p.add_argument("phi", help="outcome formula, e.g. 'F=1'")
    p.add_argument("--max-conjuncts", type=int, default=1)
    p.add_argument("--csv", action="store_true", help="print CSV instead of text")
    p.set_defaults(func=cmd_causes)

    def run_options(p):
        p.add_argument("--config", help=f"INI config (default: {default_config_path().name} bundled)")
        p.add_argument("--seed", type=int, help="base seed; restart i uses seed + i")
        p.add_argument("--out", help="output directory")
        p.add_argument("--restarts", type=int)
        p.add_argument("--episodes", type=int, help="training episodes per restart")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--eval-epsilon", type=float, help="exploration rate during evaluation")
        p.add_argument("--max-conjuncts", type=int)

    p = sub.add_parser("train", help="train one agent type over all restarts")
    run_options(p)
    p.add_argument("--agent", choices=("ac", "q"), default="ac")
    p.add_argument("--p-a", type=float, help="camping success probability for this run")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="re-evaluate the Q-tables of a run directory")
    p.add_argument("run_dir")
    p.add_argument("--episodes", type=int)
    p.add_argument("--eval-epsilon", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("reproduce", help="both agents under both conditions; writes the tables")
    run_options(p)
    p.add_argument("--plot", action="store_true", help="also write trace.svg (needs matplotlib)")
    p.add_argument("--keep-runs", action="store_true", help="also write per-restart artifacts under OUT/runs")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("inspect", help="print estimators and greedy policies of a run")
    p.add_argument("run_dir")
    p.add_argument("--restart", type=int, default=0)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except (SCMError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except ImportError as err:
        print(f"error: {err} (install matplotlib for --plot)", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
