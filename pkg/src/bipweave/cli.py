"""Command line entry point: ``bipweave weave|match|simulate|check|dot``."""
from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from .composition import (
    CompositionError,
    GlobalContainer,
    LocalContainer,
    WeaveLog,
    coverage,
    format_coverage,
    weave_containers,
)
from .conformance import DEFAULT_DEPTH, DEFAULT_MAX_STATES, FAIL, check_global, check_local
from .dynamics import dump_trace, run
from .frontend import ParseError, ValidationError, parse_aspects, parse_model, render_dot, render_model
from .global_aop import select_global, weave_global_aspect
from .local_aop import WeaveError, select_local, weave_aspect
from .model import CompositeComponent

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_VALIDATE = 3
EXIT_WEAVE = 4
EXIT_CONFORMANCE = 5


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2, which we reserve for parse errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load(args) -> tuple[CompositeComponent, dict[str, list]]:
    base = parse_model(_read(args.model), file=args.model)
    concerns: dict[str, list] = {}
    for path in args.aspects:
        af = parse_aspects(_read(path), base, file=path)
        name = os.path.splitext(os.path.basename(path))[0]
        concerns.setdefault(name, []).extend(af.containers)
    return base, concerns


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _woven(args, base, concerns, log: WeaveLog) -> CompositeComponent:
    # files in command-line order; within a file, local containers first
    c = base
    for ks in concerns.values():
        c = weave_containers(c, ks, args.strategy, log)
    return c


def cmd_weave(args) -> int:
    base, concerns = _load(args)
    log = WeaveLog()
    woven = _woven(args, base, concerns, log)
    _emit(render_model(woven), args.out)
    if args.summary:
        for rep in log.reports:
            print(rep.summary(), file=sys.stderr)
        for aid, names in log.global_matches.items():
            print(f"{aid}: {', '.join(names) or '-'}", file=sys.stderr)
    if args.coverage and concerns:
        sys.stderr.write(format_coverage(coverage(base, woven, log, concerns)))
    for w in log.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_match(args) -> int:
    base, concerns = _load(args)
    for ks in concerns.values():
        for k in ks:
            for asp in k.aspects:
                if isinstance(k, LocalContainer):
                    names = sorted(t.name for t in select_local(base.atom(asp.target), asp.pointcut))
                    where = asp.target
                else:
                    names = [a.name for a in select_global(base, asp.pointcut)]
                    where = "interactions"
                print(f"{asp.aid} [{where}]: {', '.join(names) or '-'}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    base, concerns = _load(args)
    woven = _woven(args, base, concerns, WeaveLog())
    _emit(dump_trace(woven, run(woven, args.steps, args.seed)), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    """Weave every aspect on its own and check it against the base model."""
    base, concerns = _load(args)
    status = EXIT_OK
    for ks in concerns.values():
        for k in ks:
            for asp in k.aspects:
                if isinstance(k, GlobalContainer):
                    v = check_global(base, weave_global_aspect(base, asp), asp, args.depth, args.max_states)
                else:
                    woven, _ = weave_aspect(base, asp)
                    v = check_local(base, woven, asp, args.depth, args.max_states)
                print(v.format().rstrip("\n"))
                if v.status == FAIL:
                    status = EXIT_CONFORMANCE
    return status


def cmd_dot(args) -> int:
    base, concerns = _load(args)
    woven = _woven(args, base, concerns, WeaveLog())
    _emit(render_dot(woven), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bipweave", description="Weave aspects into component models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, aspects_required: bool = False):
        sp.add_argument("model", help=".bip model file")
        sp.add_argument("aspects", nargs="+" if aspects_required else "*", help=".abip aspect files")
        sp.add_argument("--strategy", choices=["serial", "all"], default="serial")

    sp = sub.add_parser("weave", help="print the woven model")
    common(sp)
    sp.add_argument("--out", help="write the model here instead of stdout")
    sp.add_argument("--summary", action="store_true", help="report per-aspect weave maps on stderr")
    sp.add_argument("--coverage", action="store_true", help="print the coverage table on stderr")
    sp.set_defaults(func=cmd_weave)

    sp = sub.add_parser("match", help="list the joinpoints each aspect selects")
    common(sp, aspects_required=True)
    sp.set_defaults(func=cmd_match)

    sp = sub.add_parser("simulate", help="random run of the (woven) model")
    common(sp)
    sp.add_argument("--steps", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("check", help="bounded conformance check of each aspect")
    common(sp, aspects_required=True)
    sp.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    sp.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("dot", help="Graphviz rendering of the (woven) model")
    common(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_dot)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"invalid model:\n{exc}", file=sys.stderr)
        return EXIT_VALIDATE
    except (WeaveError, CompositionError) as exc:
        print(f"weave error: {exc}", file=sys.stderr)
        return EXIT_WEAVE


if __name__ == "__main__":
    sys.exit(main())
