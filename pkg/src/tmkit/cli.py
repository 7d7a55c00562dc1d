"""``tm`` command-line interface.

Exit codes: 0 success, 1 validation errors, 2 parse errors, 3 simulation
budget exhausted, 4 conformance violations, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .context import ContextError, import_context, parse_ctx
from .corpus import CorpusError, run_corpus
from .dsl import TMSyntaxError, parse_file, serialize
from .fsm import FsmError, import_fsm, parse_fsm
from .render import LEVELS, RenderError, RenderOptions, to_dot
from .sim import ScheduleError, SimulationError, conformance, parse_schedule, run
from .validate import validate_all

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PARSE = 2
EXIT_BUDGET = 3
EXIT_CONFORMANCE = 4
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _color() -> bool:
    return os.environ.get("TM_COLOR", "0") == "1"


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _write(text: str, output) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8", newline="\n")


def _load(path):
    try:
        return parse_file(path)
    except OSError as exc:
        raise UsageError(str(exc)) from None


def cmd_parse(args) -> int:
    model = _load(args.file)
    _write(serialize(model), args.output)
    return EXIT_OK


def cmd_validate(args) -> int:
    model = _load(args.file)
    report = validate_all(model)
    if args.json:
        sys.stdout.write(_dump_json({"model": model.name, "diagnostics": report.to_dicts()}))
    else:
        sys.stdout.write(report.to_text(_color()))
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_sim(args) -> int:
    model = _load(args.file)
    report = validate_all(model)
    if not report.ok:
        if args.json:
            sys.stdout.write(
                _dump_json({"model": model.name, "diagnostics": report.to_dicts(), "trace": None})
            )
        else:
            sys.stdout.write(report.to_text(_color()))
        return EXIT_INVALID
    try:
        schedule = parse_schedule(Path(args.schedule).read_text(encoding="utf-8"), args.schedule)
    except OSError as exc:
        raise UsageError(str(exc)) from None
    if args.max_ticks < 1:
        raise UsageError("--max-ticks must be at least 1")
    trace = run(model, schedule, args.max_ticks)
    conf = conformance(trace, model)
    diagnostics = list(report.diagnostics) + list(conf.diagnostics)
    if args.json:
        sys.stdout.write(
            _dump_json(
                {
                    "model": model.name,
                    "diagnostics": [d.to_dict() for d in diagnostics],
                    "trace": trace.to_dict(),
                }
            )
        )
    else:
        sys.stdout.write(trace.to_log())
        for d in conf.diagnostics:
            sys.stdout.write(d.to_line(_color()) + "\n")
    if trace.budget_exhausted:
        return EXIT_BUDGET
    if not conf.conformant:
        return EXIT_CONFORMANCE
    return EXIT_OK


def cmd_import(args) -> int:
    source = args.fsm or args.ctx
    try:
        text = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(str(exc)) from None
    name = args.name or "".join(p.capitalize() for p in Path(source).stem.split("_")) or "Model"
    if args.fsm:
        model = import_fsm(parse_fsm(text), name)
    else:
        model = import_context(parse_ctx(text), name)
    _write(serialize(model), args.output)
    return EXIT_OK


def cmd_render(args) -> int:
    model = _load(args.file)
    highlight = tuple(h for h in (args.highlight or "").split(",") if h)
    opts = RenderOptions(args.level, args.elide_rtr, highlight)
    try:
        dot = to_dot(model, opts)
    except RenderError as exc:
        if exc.report is None:
            raise UsageError(str(exc)) from None
        sys.stderr.write(exc.report.to_text(_color()))
        return EXIT_INVALID
    _write(dot, args.output)
    return EXIT_OK


def cmd_corpus(args) -> int:
    report = run_corpus(args.dir)
    sys.stdout.write(report.to_text())
    return EXIT_OK if report.ok else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tm", description="Thinging-machine models: parse, validate, simulate, import, render.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("parse", help="parse a .tm file and print its canonical form")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("validate", help="run the consistency checks")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sim", help="simulate under a stimulus schedule")
    p.add_argument("file")
    p.add_argument("--schedule", required=True)
    p.add_argument("--max-ticks", type=int, default=1000)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("import", help="redraft an FSM or context diagram as a .tm model")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--fsm", metavar="FILE")
    src.add_argument("--ctx", metavar="FILE")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--name", help="model name (default: derived from the file name)")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("render", help="export DOT for one model level")
    p.add_argument("file")
    p.add_argument("--level", choices=LEVELS, required=True)
    p.add_argument("--elide-rtr", action="store_true", help="collapse release/transfer/receive chains")
    p.add_argument("--highlight", help="comma-separated event ids")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("corpus", help="run the fixture acceptance harness")
    p.add_argument("dir")
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TMSyntaxError as exc:
        for e in exc.errors:
            sys.stderr.write(e.message + "\n")
        return EXIT_PARSE
    except CorpusError as exc:
        sys.stderr.write(f"tm: error: {exc}\n")
        return EXIT_INVALID
    except (UsageError, ScheduleError, SimulationError, FsmError, ContextError) as exc:
        sys.stderr.write(f"tm: error: {exc}\n")
        if isinstance(exc, SimulationError) and exc.report is not None:
            sys.stderr.write(exc.report.to_text(_color()))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
