"""Headless driver: synthetic data generation, one-shot report runs, graph
exports and the API server."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config
from .data import export_csv, synth_loans
from .errors import FairdeskError, ValidationError
from .metrics import ALL_KINDS
from .report import build_report, render_text, report_json_bytes
from .session import ROLE_DATA_SCIENTIST, Session

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INTERNAL = 2


class _Parser(argparse.ArgumentParser):
    """argparse that exits with the validation code on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fairdesk",
                     description="fairness investigation workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", prog="fairdesk synth",
                           help="generate a synthetic loan dataset")
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--rows", type=int, required=True)
    synth.add_argument("--out", type=Path, required=True)

    report = sub.add_parser("report", prog="fairdesk report",
                            help="run the full pipeline and write the report")
    report.add_argument("--data", type=Path, required=True)
    report.add_argument("--target", required=True)
    report.add_argument("--positive", required=True)
    report.add_argument("--sensitive", default="",
                        help="comma-separated sensitive feature names")
    report.add_argument("--metrics", default=",".join(ALL_KINDS),
                        help="comma-separated metric kinds")
    report.add_argument("--train-seed", type=int, default=None,
                        help="train the decision model with this split seed")
    report.add_argument("--config", type=Path, default=None)
    report.add_argument("--out", type=Path, required=True)

    graph = sub.add_parser("graph", prog="fairdesk graph",
                           help="learn the causal feature graph")
    graph.add_argument("--data", type=Path, required=True)
    graph.add_argument("--target", required=True)
    graph.add_argument("--positive", required=True)
    graph.add_argument("--omega", type=float, default=None)
    graph.add_argument("--lambda", dest="l1", type=float, default=None)
    graph.add_argument("--config", type=Path, default=None)
    graph.add_argument("--out", type=Path, required=True)

    serve = sub.add_parser("serve", prog="fairdesk serve",
                           help="run the HTTP API")
    serve.add_argument("--config", type=Path, default=None)
    return parser


def _session_from_flags(args, config, *, sensitive, metrics) -> Session:
    session = Session("cli", ROLE_DATA_SCIENTIST, config)
    session.set_dataset(csv_text=args.data.read_bytes())
    session.set_target(args.target, args.positive)
    session.set_model("logistic")
    session.set_sensitive({f: None for f in sensitive})
    session.set_metrics(metrics)
    return session


def _split_flag(raw: str):
    return [part.strip() for part in raw.split(",") if part.strip()]


def cmd_synth(args) -> int:
    table = synth_loans(args.seed, args.rows)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_bytes(export_csv(table))
    print(f"wrote {table.n_rows} rows x {len(table.schema)} columns to {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    config = load_config(args.config)
    if not args.data.is_file():
        raise ValidationError(f"no such data file: {args.data}")
    metrics = _split_flag(args.metrics)
    sensitive = _split_flag(args.sensitive)
    session = _session_from_flags(args, config, sensitive=sensitive,
                                  metrics=metrics)
    if args.train_seed is not None:
        session.train_model(args.train_seed)
    document = build_report(session)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_bytes(report_json_bytes(document))
    (out / "report.txt").write_text(render_text(document))
    (out / "graph.json").write_text(
        json.dumps(document["graph"], sort_keys=True, indent=2) + "\n")
    print(f"report written to {out}")
    return EXIT_OK


def cmd_graph(args) -> int:
    config = load_config(args.config)
    if args.omega is not None or args.l1 is not None:
        from dataclasses import replace
        config = replace(config,
                         omega=config.omega if args.omega is None else args.omega,
                         l1=config.l1 if args.l1 is None else args.l1)
    if not args.data.is_file():
        raise ValidationError(f"no such data file: {args.data}")
    session = _session_from_flags(args, config, sensitive=[],
                                  metrics=list(ALL_KINDS))
    graph = session.compute_graph()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(graph.to_json(), sort_keys=True, indent=2) + "\n")
    print(f"graph with {len(graph.edges)} edges written to {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import main as serve_main
    serve_main(args.config)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_VALIDATION
    handlers = {"synth": cmd_synth, "report": cmd_report,
                "graph": cmd_graph, "serve": cmd_serve}
    try:
        return handlers[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FairdeskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
