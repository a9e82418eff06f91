"""Command line entry point: ``aggmarket <command> [options]``.

Exit codes: 0 on success, 2 for bad input (including unparsable files), 3 for
markets that cannot be evaluated, such as a task on which every model
abstains.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .choice import ChoiceSpec, ValueMatrix, task_welfares
from .creation import Objective
from .errors import DegenerateMarket, InputError
from .harness import experiments as exp
from .harness.data import BenchmarkTable, load_scores
from .harness.report import FORMATS, ExperimentReport, emit, table_csv, to_json
from .harness.svg import render_report
from .replacement import bothneg_diagnosis, incentive_table, instantaneous_welfare, pair_tasks, picks

EXIT_INPUT, EXIT_DEGENERATE = 2, 3

EXPERIMENTS = {"fig4": "team_scan", "fig5": "nonmonotone_scan", "table2": "creation_table", "fig7": "replacement_scatter"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _csv_list(text):
    return [s for s in (x.strip() for x in text.split(",")) if s]


def _score_range(text):
    if text == "none":
        return None
    lo, hi = text.split(":")
    return float(lo), float(hi)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for generated markets")
    common.add_argument("--format", choices=FORMATS, default="csv")
    common.add_argument("--exclude", type=_csv_list, default=[], help="comma-separated model names to drop")
    common.add_argument("--config", help="JSON file whose keys mirror the long flag names")
    common.add_argument("--input", help="score CSV with header model,task,score")
    common.add_argument("--random-market", metavar="MxT",
                        help="use an M-model, T-task market drawn uniformly from [0, 10] with --seed")
    common.add_argument("--top-k", type=int)
    common.add_argument("--bottom-k", type=int)
    common.add_argument("--score-range", type=_score_range, default=(0.0, 10.0),
                        help="lo:hi accepted score range, or 'none'")
    common.add_argument("--out", help="output file (or directory for 'experiment')")

    p = _Parser(prog="aggmarket", description="Welfare and incentive analysis for model marketplaces.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    w = sub.add_parser("welfare", parents=[common], help="consumer welfare of a market")
    w.add_argument("--beta", type=float, default=1.0)
    w.add_argument("--choice", choices=["btl", "optimal", "random", "pairwise"], default="btl")
    w.add_argument("--c", type=float, default=1.0, help="pairwise-monotone constant")
    w.add_argument("--subset", type=_csv_list, help="only these models")

    c = sub.add_parser("create", parents=[common], help="best-response allocation of a new model")
    c.add_argument("--budget", type=float, required=False)
    c.add_argument("--beta", type=float, default=1.0)
    c.add_argument("--cap", type=float)
    c.add_argument("--objective", choices=[o.value for o in Objective] + ["all"], default="all")

    r = sub.add_parser("replace", parents=[common], help="replacement incentives of two models")
    r.add_argument("--beta", type=float, default=1.0)
    r.add_argument("--pair", type=_csv_list, required=False)

    s = sub.add_parser("scan", parents=[common], help="team or non-monotonicity scan over temperatures")
    s.add_argument("--kind", choices=["teams", "nonmonotone"], default="nonmonotone")
    s.add_argument("--beta-grid", default="0.001:1000:24", help="lo:hi:n log-spaced")
    s.add_argument("--max-team", type=int)

    e = sub.add_parser("experiment", parents=[common], help="run an experiment pipeline and write reports")
    e.add_argument("--name", choices=sorted(EXPERIMENTS), required=False)
    e.add_argument("--beta", type=float)
    e.add_argument("--beta-grid", default="0.001:1000:24")
    e.add_argument("--budget", type=float, default=120.0)
    e.add_argument("--cap", type=float)
    e.add_argument("--max-team", type=int)
    return p


def _apply_config(parser, argv):
    """Re-parse with defaults taken from ``--config`` so explicit flags win."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise InputError(f"cannot read config {args.config}: {err}") from None
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    subparser = sub_action.choices[args.command]
    known = {a.dest: a for a in subparser._actions}
    unknown = sorted(set(cfg) - set(known) - {"command"})
    if unknown:
        raise InputError(f"unknown config keys for {args.command!r}: {unknown}")
    defaults = {}
    for k, v in cfg.items():
        if k == "command":
            continue
        action = known[k]
        if isinstance(v, str) and action.type is not None:
            try:
                v = action.type(v)
            except ValueError:
                raise InputError(f"bad config value for {k!r}: {v!r}") from None
        elif isinstance(v, list) and action.type is _csv_list:
            v = [str(x) for x in v]
        defaults[k] = v
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _table(args) -> BenchmarkTable:
    if args.random_market:
        try:
            m, t = (int(x) for x in args.random_market.lower().split("x"))
        except ValueError:
            raise InputError(f"--random-market must look like MxT, got {args.random_market!r}") from None
        rng = np.random.default_rng(args.seed)
        cells = rng.uniform(0.0, 10.0, (m, t))
        market = ValueMatrix(tuple(f"m{i + 1}" for i in range(m)), tuple(f"t{j + 1}" for j in range(t)), cells)
        return BenchmarkTable.from_market(market, source=f"random:{m}x{t}:seed={args.seed}")
    if not args.input:
        raise InputError("no market given: pass --input or --random-market")
    try:
        return load_scores(args.input, exclude=args.exclude, top_k=args.top_k,
                           bottom_k=args.bottom_k, score_range=args.score_range)
    except OSError as err:
        raise InputError(f"cannot read {args.input}: {err}") from None


def _render(report: ExperimentReport, fmt: str) -> str:
    if fmt == "json":
        return to_json(report)
    if fmt == "svg":
        return render_report(report)
    text = table_csv(report.columns)
    for key in sorted(report.sections):
        text += f"\n# {key}\n" + table_csv(report.sections[key])
    return text


def _output(report, args):
    if args.out:
        emit(report, args.format, args.out)
    else:
        sys.stdout.write(_render(report, args.format))


def cmd_welfare(args):
    table = _table(args)
    market = table.market.subset(args.subset) if args.subset else table.market
    spec = {
        "btl": lambda: ChoiceSpec.btl(args.beta),
        "optimal": ChoiceSpec.optimal,
        "random": ChoiceSpec.random,
        "pairwise": lambda: ChoiceSpec.pairwise_monotone(args.c),
    }[args.choice]()
    w = task_welfares(market, spec)
    report = ExperimentReport(
        "welfare",
        {"task": list(market.tasks) + ["total"], "welfare": w.tolist() + [float(w.sum())]},
        {"choice": str(spec), "models": list(market.models), "source": table.source},
    )
    _output(report, args)


def cmd_create(args):
    if args.budget is None:
        raise InputError("--budget is required")
    table = _table(args)
    report = exp.experiment_creation_table(table, args.budget, args.beta, args.cap)
    if args.objective != "all":
        keep = [i for i, o in enumerate(report.columns["objective"]) if o == args.objective]
        report.columns = {k: [v[i] for i in keep] for k, v in report.columns.items()}
    report.metadata["objective"] = args.objective
    _output(report, args)


def cmd_replace(args):
    table = _table(args)
    market = table.market
    pair = args.pair or list(market.models[:2])
    if len(pair) != 2:
        raise InputError(f"--pair needs exactly two model names, got {pair}")
    for m in pair:
        if m not in market.models:
            raise InputError(f"unknown model {m!r}")
    tasks = pair_tasks(market, pair[0], pair[1], args.beta)
    if not tasks:
        raise DegenerateMarket(f"{pair[0]} and {pair[1]} share no task")
    ra, rb = market.row(pair[0]), market.row(pair[1])
    names = [t for t, a, b in zip(market.tasks, ra, rb) if a is not None and b is not None]
    tab = incentive_table(tasks)
    cols = {"producer": [], "objective": [], **{t: [] for t in names}, "pick": []}
    for (prod, obj), row in tab.derivatives.items():
        cols["producer"].append(pair[0] if prod == "A" else pair[1])
        cols["objective"].append(obj.value)
        for t, x in zip(names, row):
            cols[t].append(float(x))
        cols["pick"].append(names[tab.picks[(prod, obj)]])
    meta = {"beta": args.beta, "pair": pair, "source": table.source}
    for obj in Objective:
        meta[f"instantaneous_welfare_{obj.value}"] = instantaneous_welfare(tasks, *picks(tasks, obj))
    if len(tasks) >= 2:
        a, b = picks(tasks, Objective.WEIGHTED_WINRATE)
        if a != b:
            d = bothneg_diagnosis(tasks[a], tasks[b])
            meta["ww_worse_than_winrate"] = d.ww_worse_than_winrate
            meta["some_producer_negative_on_both"] = d.some_producer_negative_on_both
    _output(ExperimentReport("replacement", cols, meta), args)


def cmd_scan(args):
    table = _table(args)
    grid = exp.parse_beta_grid(args.beta_grid)
    if args.kind == "teams":
        report = exp.experiment_team_scan(table, grid, args.max_team)
    else:
        report = exp.experiment_nonmonotone_scan(table, grid)
    report.metadata["seed"] = args.seed
    _output(report, args)


def cmd_experiment(args):
    if not args.name:
        raise InputError("--name is required")
    table = _table(args)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    if args.name == "fig4":
        report = exp.experiment_team_scan(table, exp.parse_beta_grid(args.beta_grid), args.max_team)
    elif args.name == "fig5":
        report = exp.experiment_nonmonotone_scan(table, exp.parse_beta_grid(args.beta_grid))
    elif args.name == "table2":
        report = exp.experiment_creation_table(table, args.budget, args.beta or 1.0, args.cap)
    else:
        report = exp.experiment_replacement_scatter(table, args.beta if args.beta is not None else 0.05)
    report.metadata["seed"] = args.seed
    path = out / f"{EXPERIMENTS[args.name]}.{args.format}"
    for written in emit(report, args.format, path):
        print(written)


COMMANDS = {
    "welfare": cmd_welfare,
    "create": cmd_create,
    "replace": cmd_replace,
    "scan": cmd_scan,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        COMMANDS[args.command](args)
    except InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except DegenerateMarket as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
