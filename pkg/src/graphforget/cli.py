"""Command-line front end: compile, split, eval, simulate, report.

Exit codes: 0 success, 2 usage, 3 file parse error, 4 validation error,
5 convergence/divergence error.  Values may come from an INI config file
(one section per command) with command-line flags taking precedence.
GRAPHFORGET_SEED sets the default seed.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import compiler, metrics, reporting, unlearn
from .compiler import ForgetSplit
from .errors import (ConvergenceError, DatasetParseError, DivergenceError,
                     GraphforgetError, InvalidParameterError, MissingGenerationsError,
                     NotFoundError)
from .graphs import TopologySpec

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_CONVERGENCE = 5


def _default_seed() -> int:
    return int(os.environ.get("GRAPHFORGET_SEED", "0"))


def _edge_list(text: str) -> list[str]:
    return [e for e in (part.strip() for part in text.split(",")) if e]


def _node_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("-")
    if not sep:
        raise ValueError(f"expected LO-HI, got {text!r}")
    return int(lo), int(hi)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphforget",
        description="Compile contract-QA datasets over graph topologies, split them "
                    "by edge, score model outputs, and run toy unlearning simulations.")
    parser.add_argument("--config", type=Path, default=None,
                        help="INI config file with one section per command; flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a dataset file plus manifest")
    p.add_argument("--topology", type=TopologySpec.parse, required=True,
                   help="dataset1 | dataset2[:semi_edges] | chain:N | complete:N | semi_dense:N:E[:SEED]")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--no-manifest", action="store_true")

    p = sub.add_parser("split", help="split a dataset into forget/retain files by edge")
    p.add_argument("dataset", type=Path)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--edges", type=_edge_list, help="comma-separated edge labels")
    group.add_argument("--sample-subgraph", type=_node_range, metavar="LO-HI",
                       help="sample one edge whose endpoints lie in this node-index range")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--out-prefix", type=Path, default=None,
                   help="writes PREFIX.forget.jsonl and PREFIX.retain.jsonl (default: dataset stem)")

    p = sub.add_parser("eval", help="score a generations file against split files")
    p.add_argument("--forget", type=Path, required=True)
    p.add_argument("--retain", type=Path, required=True)
    p.add_argument("--generations", type=Path, required=True)
    p.add_argument("--ranks", type=Path, default=None)
    p.add_argument("--thr-cutoff", type=int, default=100)
    p.add_argument("--label", default="eval")
    p.add_argument("-o", "--output", type=Path, default=None, help="write the report JSON here")

    p = sub.add_parser("simulate", help="memorize a dataset, unlearn a split, report metrics")
    p.add_argument("dataset", type=Path, help="dataset file with manifest sidecar")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--edges", type=_edge_list)
    group.add_argument("--sample-subgraph", type=_node_range, metavar="LO-HI")
    p.add_argument("--method", default="ga",
                   help="ga | gd | ukl | dpo | npo | all (default: ga)")
    p.add_argument("--beta", type=float, default=0.1, help="npo beta")
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--lr-sweep", action="store_true",
                   help="select lr per method: max forgetting subject to the retain floor")
    p.add_argument("--retain-floor", type=float, default=0.8)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--memorize-lr", type=float, default=3e-2)
    p.add_argument("--memorize-epochs", type=int, default=3000)
    p.add_argument("--seeds", type=int, default=1, help="number of independent runs")
    p.add_argument("--seed", type=int, default=None, help="base seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel simulations")
    p.add_argument("-o", "--output", type=Path, required=True, help="output directory")

    p = sub.add_parser("report", help="render a comparison table from report JSON files")
    p.add_argument("reports", type=Path, nargs="+")
    p.add_argument("--json-out", type=Path, default=None)
    p.add_argument("-o", "--output", type=Path, default=None, help="write the text table here")

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Seed subcommand defaults from the INI file named by --config."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", type=Path, default=None)
    known, _ = probe.parse_known_args(argv)
    if known.config is None:
        return
    if not known.config.exists():
        raise DatasetParseError("config file not found", str(known.config))
    ini = configparser.ConfigParser()
    try:
        ini.read(known.config)
    except configparser.Error as err:
        raise DatasetParseError(f"bad config file: {err}", str(known.config)) from None

    for action in parser._subparsers._group_actions:  # noqa: SLF001 - argparse offers no public hook
        for name, sub in action.choices.items():
            if not ini.has_section(name):
                continue
            section = ini[name]
            defaults = {}
            for sub_action in sub._actions:
                if sub_action.dest in ("help", "command") or sub_action.dest not in section:
                    continue
                raw = section[sub_action.dest]
                if isinstance(sub_action, argparse._StoreTrueAction):
                    defaults[sub_action.dest] = section.getboolean(sub_action.dest)
                elif sub_action.type is not None:
                    try:
                        defaults[sub_action.dest] = sub_action.type(raw)
                    except Exception as err:
                        raise DatasetParseError(
                            f"bad config value for {name}.{sub_action.dest}: {err}",
                            str(known.config)) from None
                else:
                    defaults[sub_action.dest] = raw
            sub.set_defaults(**defaults)


def cmd_compile(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    ds = compiler.compile_dataset(args.topology, seed)
    compiler.export_dataset(ds, args.output, manifest=not args.no_manifest)
    print(f"wrote {len(ds.qa)} QA pairs ({ds.graph.node_count} nodes, "
          f"{ds.graph.edge_count} edges) to {args.output}")
    return EXIT_OK


def _load_for_split(args):
    if args.sample_subgraph is not None:
        ds = compiler.recompile_from_manifest(args.dataset)
        seed = args.seed if args.seed is not None else _default_seed()
        edge = compiler.sample_forget_edge(ds, args.sample_subgraph, seed)
        print(f"sampled forget edge: {edge}")
        return ds, [edge]
    imported = compiler.import_dataset(args.dataset)
    if imported.manifest is not None:
        return compiler.recompile_from_manifest(args.dataset), args.edges
    return imported, args.edges


def cmd_split(args) -> int:
    source, edges = _load_for_split(args)
    if isinstance(source, compiler.CompiledDataset):
        split = compiler.split_forget(source, edges)
    else:
        known = {p.edge for p in source.qa}
        unknown = set(edges) - known
        if unknown:
            raise NotFoundError(f"unknown edge label(s) {sorted(unknown)}; "
                                f"valid labels: {sorted(known)}")
        split = ForgetSplit(
            forget_edges=frozenset(edges),
            forget=tuple(p for p in source.qa if p.edge in set(edges)),
            retain=tuple(p for p in source.qa if p.edge not in set(edges)),
        )
    prefix = args.out_prefix if args.out_prefix is not None else args.dataset.with_suffix("")
    forget_path = Path(f"{prefix}.forget.jsonl")
    retain_path = Path(f"{prefix}.retain.jsonl")
    compiler.export_split(split, forget_path, retain_path)
    print(f"wrote {len(split.forget)} forget lines to {forget_path}")
    print(f"wrote {len(split.retain)} retain lines to {retain_path}")
    return EXIT_OK


def _split_from_files(forget_path: Path, retain_path: Path) -> ForgetSplit:
    forget = compiler.import_dataset(forget_path)
    retain = compiler.import_dataset(retain_path)
    return ForgetSplit(
        forget_edges=frozenset(p.edge for p in forget.qa),
        forget=forget.qa,
        retain=retain.qa,
    )


def cmd_eval(args) -> int:
    split = _split_from_files(args.forget, args.retain)
    generations = metrics.read_generations(args.generations)
    ranks = metrics.read_ranks(args.ranks) if args.ranks else None
    report = metrics.aggregate(split, generations, ranks, thr_cutoff=args.thr_cutoff)
    row = reporting.summarize_runs(args.label, [report])
    print(reporting.render_table([row]), end="")
    if args.output:
        args.output.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def _parse_methods(text: str, beta: float) -> list[unlearn.UnlearnMethod]:
    if text == "all":
        return [unlearn.UnlearnMethod(name, beta) for name in unlearn.METHOD_NAMES]
    return [unlearn.UnlearnMethod(text, beta)]


def cmd_simulate(args) -> int:
    ds = compiler.recompile_from_manifest(args.dataset)
    base_seed = args.seed if args.seed is not None else _default_seed()
    if args.sample_subgraph is not None:
        edge = compiler.sample_forget_edge(ds, args.sample_subgraph, base_seed)
        print(f"sampled forget edge: {edge}")
        edges = [edge]
    else:
        edges = args.edges
    split = compiler.split_forget(ds, edges)
    methods = _parse_methods(args.method, args.beta)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)

    def memorized(seed: int):
        cfg = unlearn.memorize_config(learning_rate=args.memorize_lr,
                                      epochs=args.memorize_epochs, seed=seed)
        return unlearn.memorize(ds, cfg, d=args.dim)

    seeds = [base_seed + i for i in range(args.seeds)]
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        models = list(pool.map(lambda s: memorized(s), seeds))

    rows = []
    table_rows = []
    for method in methods:
        cfg = unlearn.TrainConfig(learning_rate=args.lr, epochs=args.epochs,
                                  batch_size=args.batch_size, seed=base_seed)
        if args.lr_sweep:
            sweep = unlearn.sweep_learning_rate(models[0][0], split, method, cfg,
                                                retain_floor=args.retain_floor)
            cfg = replace(cfg, learning_rate=sweep.selected)
            print(f"[{method.name}] swept lr -> {sweep.selected:g}")
            (outdir / f"{method.name}.sweep.json").write_text(json.dumps({
                "selected": sweep.selected,
                "retain_floor": sweep.retain_floor,
                "rows": [vars(r) for r in sweep.rows],
            }, indent=2) + "\n", encoding="utf-8")

        def one_run(idx: int):
            model, reference = models[idx]
            run_cfg = replace(cfg, seed=seeds[idx])
            return unlearn.run_unlearning(model.copy(), split, method, run_cfg,
                                          reference=reference)

        with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
            results = list(pool.map(one_run, range(len(seeds))))
        for seed, result in zip(seeds, results):
            unlearn.export_sim_result(result, outdir, f"{method.name}.seed{seed}")
        row = reporting.summarize_runs(method.name, [r.final for r in results])
        table_rows.append(row)
        rows.append({"method": method.name, "learning_rate": cfg.learning_rate,
                     "seeds": seeds, "finals": [r.final.to_dict() for r in results]})

    table = reporting.render_table(table_rows, label_header="Method")
    print(table, end="")
    (outdir / "report.json").write_text(json.dumps({
        "dataset": str(args.dataset), "forget_edges": sorted(split.forget_edges),
        "rows": rows}, indent=2) + "\n", encoding="utf-8")
    (outdir / "report.txt").write_text(table, encoding="utf-8")
    return EXIT_OK


def cmd_report(args) -> int:
    table_rows = []
    for path in args.reports:
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as err:
            raise DatasetParseError(f"cannot read report: {err}", str(path)) from None
        if "rows" in payload:  # simulate-style aggregate report
            for row in payload["rows"]:
                table_rows.append(reporting.summarize_runs(
                    f"{path.stem}:{row['method']}", row["finals"]))
        elif "final" in payload:  # single SimResult report
            table_rows.append(reporting.summarize_runs(path.stem, [payload["final"]]))
        else:  # bare MetricReport dict
            table_rows.append(reporting.summarize_runs(path.stem, [payload]))
    table = reporting.render_table(table_rows)
    print(table, end="")
    if args.output:
        args.output.write_text(table, encoding="utf-8")
    if args.json_out:
        args.json_out.write_text(json.dumps({"rows": table_rows}, indent=2) + "\n",
                                 encoding="utf-8")
    return EXIT_OK


_COMMANDS = {
    "compile": cmd_compile,
    "split": cmd_split,
    "eval": cmd_eval,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except DatasetParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except (InvalidParameterError, NotFoundError, MissingGenerationsError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, DivergenceError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except GraphforgetError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
