"""Command-line entry point.

Exit codes: 0 ok, 1 usage or unknown id, 2 parse error, 3 validation or
binding error, 4 unreachable / no trace.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .archive import ArchiveError, dump_archive, is_archive, load_archive
from .dv import ConvergenceError
from .model import ModelReferenceError, ModelSyntaxError, parse_model, validate
from .partition import DEFAULT_SUBNET_BASE, render_partition
from .query import (
    BindingError,
    NoAddressError,
    UnknownElementError,
    UnreachableError,
    bind_product,
    impact,
    neighbors,
    trace,
)
from .reconcile import (
    ChangeError,
    ChangeSyntaxError,
    UnknownIdError,
    apply_changes,
    event_log,
    parse_changes,
)
from .world import World, build_world

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_INVALID = 3
EXIT_UNREACHABLE = 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _natural(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a natural number, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a natural number >= 1, got {n}")
    return n


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_PARSE) from None


def _parse(text: str):
    try:
        return parse_model(text)
    except ModelSyntaxError as exc:
        raise CliError(f"parse error: {exc}", EXIT_PARSE) from None
    except ModelReferenceError as exc:
        raise CliError(f"invalid model: {exc}", EXIT_INVALID) from None


def _load(args) -> World:
    text = _read(args.model)
    if is_archive(text):
        try:
            return load_archive(text)
        except ArchiveError as exc:
            raise CliError(f"bad archive: {exc}", EXIT_PARSE) from None
        except ModelSyntaxError as exc:
            raise CliError(f"parse error in archive: {exc}", EXIT_PARSE) from None
    model = _parse(text)
    report = validate(model)
    if not report.ok:
        raise CliError(report.render().rstrip("\n"), EXIT_INVALID)
    return build_world(model, args.subnet_base, max_rounds=args.max_rounds)


def cmd_check(args) -> int:
    model = _parse(_read(args.model))
    report = validate(model)
    sys.stdout.write(report.render())
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_partition(args) -> int:
    w = _load(args)
    sys.stdout.write(render_partition(w.partition, w.plan, w.model))
    return EXIT_OK


def cmd_tables(args) -> int:
    w = _load(args)
    sys.stdout.write(w.table_dump())
    return EXIT_OK


def cmd_trace(args) -> int:
    w = _load(args)
    sys.stdout.write(trace(w, args.source, args.target).render())
    return EXIT_OK


def cmd_neighbors(args) -> int:
    w = _load(args)
    for e in neighbors(w, args.of, args.level):
        print(e)
    return EXIT_OK


def cmd_impact(args) -> int:
    w = _load(args)
    sys.stdout.write(impact(w, args.element).render())
    return EXIT_OK


def cmd_apply(args) -> int:
    world = _load(args)
    try:
        ops = parse_changes(_read(args.changes))
    except ChangeSyntaxError as exc:
        raise CliError(f"parse error in {args.changes}: {exc}", EXIT_PARSE) from None
    try:
        world, reports = apply_changes(world, ops, args.max_rounds)
    except ChangeError as exc:
        for rep in exc.reports or ():
            sys.stdout.write(rep.render() + "\n")
        if args.out:
            Path(args.out + ".partial").write_text(dump_archive(exc.world), encoding="utf-8")
        code = EXIT_USAGE if isinstance(exc, UnknownIdError) else EXIT_INVALID
        raise CliError(f"change {exc.index + 1} ({ops[exc.index].text()}) failed: {exc}", code) from None
    for rep in reports:
        sys.stdout.write(rep.render() + "\n")
    if args.out:
        Path(args.out).write_text(dump_archive(world), encoding="utf-8")
    print(f"{len(reports)} change(s) applied")
    return EXIT_OK


def cmd_bind(args) -> int:
    w = _load(args)
    sys.stdout.write(bind_product(w, args.product).render())
    return EXIT_OK


def cmd_log(args) -> int:
    w = _load(args)
    for seq, op, digest in event_log(w):
        print(f"{seq}\t{op.text()}\t{digest}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spltrace", description="Trace features to components over a routed product-line model.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("model", help="model file or world archive")
        sp.add_argument("--subnet-base", type=_natural, default=DEFAULT_SUBNET_BASE)
        sp.add_argument("--max-rounds", type=_natural, default=None,
                        help="convergence round limit (default: subnetworks + 1)")
        sp.set_defaults(func=func)
        return sp

    sp = sub.add_parser("check", help="parse and validate a model file")
    sp.add_argument("model")
    sp.set_defaults(func=cmd_check)

    add("partition", cmd_partition, "print subnetworks, addresses and routers")
    add("tables", cmd_tables, "print converged routing tables")
    sp = add("trace", cmd_trace, "trace between two elements")
    sp.add_argument("--from", dest="source", required=True)
    sp.add_argument("--to", dest="target", required=True)
    sp = add("neighbors", cmd_neighbors, "list neighbours of an element at a given level")
    sp.add_argument("--of", required=True)
    sp.add_argument("--level", type=_natural, default=1)
    sp = add("impact", cmd_impact, "features, products and subnetworks containing an element")
    sp.add_argument("--element", required=True)
    sp = add("apply", cmd_apply, "apply a change file and report trace adjustments")
    sp.add_argument("changes")
    sp.add_argument("--out", help="write the resulting world archive here")
    sp = add("bind", cmd_bind, "bind a product and allocate variant addresses")
    sp.add_argument("--product", required=True)
    add("log", cmd_log, "print the change log stored in an archive")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except UnknownElementError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoAddressError, UnreachableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except BindingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
