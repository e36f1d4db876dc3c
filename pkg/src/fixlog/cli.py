"""Command line front end.

Exit codes: 0 ok, 1 evaluated to false, 2 validation error, 3 discrepancy
found, 4 usage or I/O error.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .evaluator import IllFormed, eval_formula, eval_program, satisfying_tuples
from .harness.mutants import MUTANTS
from .model import Diagnostic, FixlogError, ValidationError, free_vars
from .structures import UnboundVariable, validate_structure
from .syntax import (
    ParseError, parse_formula_file, parse_program_file, parse_structure, print_formula_file, print_program,
    print_relation,
)

OK, FALSE, INVALID, DISCREPANCY, USAGE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def describe(d: Diagnostic, path: str = "", text: str | None = None) -> str:
    where = path
    if d.span is not None and text is not None:
        line, col = line_col(text, d.span.start)
        where = f"{path}:{line}:{col}" if path else f"{line}:{col}"
    msg = d.message
    if isinstance(msg, str) and msg.startswith(d.code + " at "):
        # parse errors already carry offsets; keep only the message
        msg = msg.split(": ", 1)[1]
    head = f"{where}: " if where else ""
    return f"{head}{d.code}: {msg}" + (f" ({d.path})" if d.path else "")


class _Invalid(Exception):
    def __init__(self, diagnostics, path, text):
        self.lines = [describe(d, path, text) for d in diagnostics]


def _load(kind: str, path: str, reserved: bool = False):
    text = _read(path)
    try:
        if kind == "formula":
            return parse_formula_file(text, reserved)
        if kind == "program":
            return parse_program_file(text, reserved)
        return parse_structure(text, reserved)
    except ParseError as e:
        raise _Invalid([e.diagnostic()], path, text) from None
    except ValidationError as e:
        raise _Invalid(e.diagnostics, path, text) from None


def _structure_for(vocab, path):
    s = _load("structure", path, True)
    problems = validate_structure(s, vocab)
    if problems:
        raise _Invalid(problems, path, None)
    return s


def _valuation(spec: str | None) -> dict[str, int]:
    out = {}
    if not spec:
        return out
    for item in spec.split(","):
        name, sep, value = item.partition("=")
        if not sep or not value.strip().isdigit():
            raise UsageError(f"bad --val entry {item!r}; expected NAME=INT")
        out[name.strip()] = int(value)
    return out


def cmd_eval_formula(args, out) -> int:
    f, vocab = _load("formula", args.formula, args.allow_reserved)
    s = _structure_for(vocab, args.structure)
    val = _valuation(args.val)
    bad = [k for k, a in val.items() if not 0 <= a < s.n]
    if bad:
        raise UsageError(f"value of {bad[0]} is outside the universe 0..{s.n - 1}")
    if args.free:
        variables = sorted(free_vars(f) - set(val))
        tuples = satisfying_tuples(f, s, variables, val)
        out.write(print_relation(tuples) + "\n")
        return OK
    missing = sorted(free_vars(f) - set(val))
    if missing:
        raise UsageError(f"no value for free variable(s) {', '.join(missing)}; use --val or --free")
    truth = eval_formula(f, s, val)
    out.write("true\n" if truth else "false\n")
    return OK if truth else FALSE


def cmd_eval_program(args, out) -> int:
    pf = _load("program", args.program, args.allow_reserved)
    p = pf.program
    s = _structure_for(p.vocab.substrate(), args.structure)
    interp, trace = eval_program(p, s)
    if args.trace:
        for i, stage in enumerate(trace):
            parts = [f"{q} = {print_relation(stage[q])}" for q in sorted(stage)]
            out.write(f"stage {i}: " + "; ".join(parts) + "\n")
    for q in sorted(interp):
        out.write(f"{q} = {print_relation(interp[q])}\n")
    return OK


def cmd_to_formula(args, out) -> int:
    from .translate import UnknownTarget, program_to_formula
    pf = _load("program", args.program, args.allow_reserved)
    try:
        f = program_to_formula(pf.program, args.target)
    except UnknownTarget as e:
        raise _Invalid([Diagnostic("UnknownTarget", str(e))], args.program, None) from None
    out.write(print_formula_file(f, pf.program.vocab.substrate()))
    return OK


def cmd_to_program(args, out) -> int:
    from .translate import formula_to_program
    f, vocab = _load("formula", args.formula, args.allow_reserved)
    text = _read(args.formula)
    try:
        tr = formula_to_program(f, vocab)
    except ValidationError as e:
        raise _Invalid(e.diagnostics, args.formula, text) from None
    out.write(print_program(tr.program, tr.atom))
    return OK


def cmd_normalize(args, out) -> int:
    from .translate import normalize
    f, vocab = _load("formula", args.formula, args.allow_reserved)
    out.write(print_formula_file(normalize(f).as_formula(), vocab))
    return OK


_KINDS = {".efpl": "formula", ".dl": "program", ".struct": "structure"}


def cmd_check(args, out) -> int:
    kind = args.kind or _KINDS.get(Path(args.file).suffix)
    if kind is None:
        raise UsageError(f"cannot tell the kind of {args.file}; pass --kind")
    _load(kind, args.file, args.allow_reserved)
    out.write("ok\n")
    return OK


def cmd_fuzz(args, out) -> int:
    from .harness import GenConfig, fuzz
    from .translate import DEFAULT
    seed = args.seed
    if seed is None:
        env = os.environ.get("FIXLOG_SEED", "0")
        if not env.isdigit():
            raise UsageError("FIXLOG_SEED must be a non-negative integer")
        seed = int(env)
    cfg = GenConfig(seed=seed, trials=args.trials, universe=(1, args.max_universe), max_depth=args.depth)
    problems = cfg.problems()
    if problems:
        raise UsageError("; ".join(problems))
    translator = MUTANTS[args.mutant]() if args.mutant else DEFAULT
    status = OK
    for report in fuzz(cfg, translator, checks=args.check or ("program", "formula", "homomorphism")):
        if report.discrepancy is None:
            out.write(f"{report.name}: ok ({report.trials} trials, seed {seed})\n")
        else:
            status = DISCREPANCY
            at = "" if report.found_at is None else f" at trial {report.found_at}"
            out.write(f"{report.name}: DISCREPANCY{at}\n{report.discrepancy.to_text()}\n")
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fixlog", description="Existential fixed-point logic and liberal Datalog.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    # generated names carry the reserved marker; reading them back needs this flag
    reading = _Parser(add_help=False)
    reading.add_argument("--allow-reserved", action="store_true",
                         help="accept names containing the reserved marker _g, as in generated output")

    c = sub.add_parser("eval-formula", parents=[reading], help="evaluate a formula over a structure")
    c.add_argument("formula")
    c.add_argument("structure")
    c.add_argument("--val", help="values for free variables, e.g. X=3,Y=0")
    c.add_argument("--free", action="store_true", help="print the satisfying tuples of the remaining free variables")
    c.set_defaults(run=cmd_eval_formula)

    c = sub.add_parser("eval-program", parents=[reading], help="compute the least fixed point of a program")
    c.add_argument("program")
    c.add_argument("structure")
    c.add_argument("--trace", action="store_true", help="print every iteration stage")
    c.set_defaults(run=cmd_eval_program)

    c = sub.add_parser("to-formula", parents=[reading], help="translate a program into a formula")
    c.add_argument("program")
    c.add_argument("--target", required=True)
    c.set_defaults(run=cmd_to_formula)

    c = sub.add_parser("to-program", parents=[reading], help="translate a formula into a program")
    c.add_argument("formula")
    c.set_defaults(run=cmd_to_program)

    c = sub.add_parser("normalize", parents=[reading], help="print the normal form of a formula")
    c.add_argument("formula")
    c.set_defaults(run=cmd_normalize)

    c = sub.add_parser("check", parents=[reading], help="parse and validate a file")
    c.add_argument("file")
    c.add_argument("--kind", choices=("formula", "program", "structure"))
    c.set_defaults(run=cmd_check)

    c = sub.add_parser("fuzz", help="run the differential checks on random inputs")
    c.add_argument("--seed", type=int)
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--max-universe", type=int, default=4)
    c.add_argument("--depth", type=int, default=4)
    c.add_argument("--check", action="append", choices=("program", "formula", "homomorphism"))
    c.add_argument("--mutant", choices=sorted(MUTANTS), help="run against a deliberately broken translator")
    c.set_defaults(run=cmd_fuzz)
    return ap


def run(argv, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return args.run(args, out)
    except UsageError as e:
        err.write(f"usage error: {e}\n")
        return USAGE
    except _Invalid as e:
        for line in e.lines:
            err.write(line + "\n")
        return INVALID
    except (UnboundVariable, IllFormed) as e:
        err.write(f"error: {type(e).__name__}: {e}\n")
        return INVALID
    except FixlogError as e:
        err.write(f"error: {e}\n")
        return INVALID


def main() -> None:
    sys.exit(run(sys.argv[1:]))
