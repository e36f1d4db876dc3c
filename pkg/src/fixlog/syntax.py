"""Text formats for formulas, programs and structures.

Formulas::

    let y(U) <- U = 0 | exists W (U = s(W) & y(W) & p(W)) then y(X)

Programs::

    substrate:
      fun s/1, 0/0.
      neg edge/2.
    superstrate:
      path/2.
    path(X, Y) <- edge(X, Y).
    path(X, Y) <- path(X, Z) & edge(Z, Y).

Structures::

    universe 3;
    fun s = [1, 2, 2];
    rel edge/2 = {(0, 1), (1, 2)};

``#`` starts a comment running to the end of the line.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Union

import numpy as np

from .model import (
    EQ, FALSE, RESERVED, TRUE, And, App, Atom, Clause, Diagnostic, Exists, FixlogError, Formula, Let, NegAtom,
    Or, Program, Rule, SourceSpan, Term, ValidationError, Var, Vocabulary, check_formula, check_program, conj,
    infer_vocabulary,
)
from .structures import Structure, validate_structure

KEYWORDS = {"exists", "let", "then", "true", "false"}


class ParseError(FixlogError):
    def __init__(self, message: str, span: SourceSpan, expected: Iterable[str] = (), code: str = "SyntaxError"):
        self.code = code
        self.span = span
        self.expected = sorted(set(expected))
        exp = f" (expected {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{code} at {span.start}:{span.end}: {message}{exp}")

    def diagnostic(self) -> Diagnostic:
        return Diagnostic(self.code, str(self), "", self.span)


@dataclass(frozen=True)
class Token:
    kind: str  # "name", "var", "op", "eof"
    text: str
    start: int
    end: int

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.start, self.end)


_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<var>[A-Z][A-Za-z0-9_]*)
  | (?P<name>[a-z0-9][A-Za-z0-9_]*)
  | (?P<op><-|!=|[()\[\]{},.;:/&|!=])
""", re.VERBOSE)


def tokenize(text: str, allow_reserved: bool = False) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", SourceSpan(pos, pos + 1))
        kind = m.lastgroup
        if kind != "ws":
            tok = Token(kind, m.group(), m.start(), m.end())
            if kind in ("var", "name") and RESERVED in tok.text and not allow_reserved:
                raise ParseError(f"{tok.text!r} uses the reserved marker {RESERVED!r}", tok.span,
                                 code="ReservedPrefixUsed")
            out.append(tok)
        pos = m.end()
    out.append(Token("eof", "", len(text), len(text)))
    return out


class _Parser:
    def __init__(self, text: str, allow_reserved: bool = False):
        self.text = text
        self.toks = tokenize(text, allow_reserved)
        self.i = 0

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "name") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def fail(self, expected: Iterable[str], tok: Token | None = None):
        tok = tok or self.tok
        got = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"unexpected {got}", tok.span, expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail([repr(text)])
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind not in ("name", "var") or self.tok.text in KEYWORDS:
            self.fail(["identifier"])
        return self.advance()

    def variable(self) -> str:
        if self.tok.kind != "var":
            self.fail(["variable"])
        return self.advance().text

    def integer(self) -> int:
        t = self.tok
        if t.kind != "name" or not t.text.isdigit():
            self.fail(["integer"])
        self.advance()
        return int(t.text)

    def span_from(self, start: int) -> SourceSpan:
        return SourceSpan(start, self.toks[self.i - 1].end)

    def end(self):
        if self.tok.kind != "eof":
            self.fail(["end of input"])

    # -- terms
    def term(self) -> Term:
        t = self.tok
        if t.kind == "var" and self.peek().text != "(":
            self.advance()
            return Var(t.text, t.span)
        name = self.ident()
        args = self.arglist() if self.at("(") else ()
        return App(name.text, args, self.span_from(name.start))

    def arglist(self) -> tuple[Term, ...]:
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.term())
            while self.at(","):
                self.advance()
                args.append(self.term())
        self.expect(")")
        return tuple(args)

    # -- formulas
    def formula(self) -> Formula:
        start = self.tok.start
        items = [self.conjunction()]
        while self.at("|"):
            self.advance()
            items.append(self.conjunction())
        return items[0] if len(items) == 1 else Or(tuple(items), self.span_from(start))

    def conjunction(self) -> Formula:
        start = self.tok.start
        items = [self.unary()]
        while self.at("&"):
            self.advance()
            items.append(self.unary())
        return items[0] if len(items) == 1 else And(tuple(items), self.span_from(start))

    def unary(self) -> Formula:
        t = self.tok
        if self.at("!"):
            self.advance()
            if self.at("("):
                self.advance()
                a = self.atom()
                self.expect(")")
            else:
                a = self.atom()
            if isinstance(a, NegAtom):
                self.fail(["atom"], t)
            return NegAtom(a.pred, a.args, self.span_from(t.start))
        if t.kind == "op" and t.text == "(":
            self.advance()
            f = self.formula()
            self.expect(")")
            return f
        if t.kind == "name" and t.text == "true":
            self.advance()
            return And((), t.span)
        if t.kind == "name" and t.text == "false":
            self.advance()
            return Or((), t.span)
        if t.kind == "name" and t.text == "exists":
            self.advance()
            names = [self.variable()]
            while self.tok.kind == "var":
                names.append(self.variable())
            self.expect("(")
            body = self.formula()
            self.expect(")")
            sp = self.span_from(t.start)
            for v in reversed(names):
                body = Exists(v, body, sp)
            return body
        if t.kind == "name" and t.text == "let":
            self.advance()
            clauses = [self.clause()]
            while self.at(","):
                self.advance()
                clauses.append(self.clause())
            self.expect("then")
            body = self.formula()
            return Let(tuple(clauses), body, self.span_from(t.start))
        return self.atom()

    def clause(self) -> Clause:
        name = self.ident()
        head = []
        if self.at("("):
            self.advance()
            if not self.at(")"):
                head.append(self.variable())
                while self.at(","):
                    self.advance()
                    head.append(self.variable())
            self.expect(")")
        self.expect("<-")
        body = self.formula()
        return Clause(name.text, tuple(head), body, self.span_from(name.start))

    def atom(self) -> Union[Atom, NegAtom]:
        t = self.tok
        if t.kind not in ("name", "var") or t.text in KEYWORDS:
            self.fail(["atom", "'('", "'!'", "'exists'", "'let'", "'true'", "'false'"])
        if t.kind == "var" and self.peek().text not in ("(", "=", "!="):
            # bare upper-case name in atom position: a generated 0-ary predicate
            self.advance()
            return Atom(t.text, (), t.span)
        left = self.term()
        if self.at("=", "!="):
            op = self.advance().text
            right = self.term()
            cls = Atom if op == "=" else NegAtom
            return cls(EQ, (left, right), self.span_from(t.start))
        if isinstance(left, Var):
            self.fail(["'='", "'!='"])
        return Atom(left.fn, left.args, left.span)

    # -- declarations
    def signatures(self) -> list[tuple[str, int]]:
        sigs = [self.signature()]
        while self.at(","):
            self.advance()
            sigs.append(self.signature())
        self.expect(".")
        return sigs

    def signature(self) -> tuple[str, int]:
        name = self.ident().text
        self.expect("/")
        return name, self.integer()

    def at_section(self, name: str) -> bool:
        return self.tok.kind == "name" and self.tok.text == name and self.peek().text == ":"

    def declarations(self, funs: dict, neg: dict, pos: dict):
        while self.tok.kind == "name" and self.tok.text in ("fun", "neg", "pos") \
                and self.peek().kind in ("name", "var") and self.peek(2).text == "/":
            kind = self.advance().text
            target = {"fun": funs, "neg": neg, "pos": pos}[kind]
            for name, k in self.signatures():
                if name in funs or name in neg or name in pos:
                    raise ParseError(f"{name!r} declared twice", self.toks[self.i - 1].span)
                target[name] = k


# --------------------------------------------------------------------------
# public parsing API


def parse_formula(text: str, allow_reserved: bool = False) -> Formula:
    return parse_formula_file(text, allow_reserved)[0]


def parse_formula_file(text: str, allow_reserved: bool = False) -> tuple[Formula, Vocabulary]:
    """Parse an optional ``vocabulary:`` header followed by one formula.

    Without a header the vocabulary is inferred, every predicate being
    negatable.  The formula is checked against the vocabulary.
    """
    p = _Parser(text, allow_reserved)
    vocab = None
    if p.at_section("vocabulary"):
        p.advance()
        p.advance()
        funs, neg, pos = {}, {}, {}
        p.declarations(funs, neg, pos)
        vocab = Vocabulary.make(funs, neg, pos)
    f = p.formula()
    p.end()
    if vocab is None:
        vocab = infer_vocabulary(f)
    problems = check_formula(f, vocab)
    if problems:
        raise ValidationError(problems)
    return f, vocab


def _split_body(f: Formula, superstrate, top: bool = True) -> list[tuple[list[Atom], list[Formula]]]:
    """Split a body into separate rule bodies.

    A disjunction becomes several rules when it is the whole body or when it
    mentions a superstrate predicate; other disjunctions stay in the
    substrate constraint.
    """
    if isinstance(f, Atom) and f.pred in superstrate:
        return [([f], [])]
    if isinstance(f, And):
        out = [([], [])]
        for g in f.items:
            out = [(a1 + a2, c1 + c2) for (a1, c1), (a2, c2) in product(out, _split_body(g, superstrate, False))]
        return out
    if isinstance(f, Or) and (top or _mentions(f, superstrate)):
        return [part for g in f.items for part in _split_body(g, superstrate, top)]
    return [([], [f])]


def _mentions(f: Formula, preds) -> bool:
    from .model import subformulas
    return any(isinstance(g, (Atom, NegAtom)) and g.pred in preds for g in subformulas(f))


def rules_from_body(head: Atom, body: Formula, superstrate, span=None) -> list[Rule]:
    rules = []
    for atoms, rest in _split_body(body, superstrate):
        constraint = conj(rest) if rest else None
        if constraint == TRUE:
            constraint = None
        rules.append(Rule(head, tuple(atoms), constraint, span))
    return rules


@dataclass(frozen=True)
class ProgramFile:
    program: Program
    distinguished: Atom | None = None


def parse_program(text: str, allow_reserved: bool = False) -> Program:
    return parse_program_file(text, allow_reserved).program


def parse_program_file(text: str, allow_reserved: bool = False) -> ProgramFile:
    p = _Parser(text, allow_reserved)
    distinguished = None
    if p.at_section("distinguished"):
        p.advance()
        p.advance()
        distinguished = p.atom()
        if p.at("."):
            p.advance()
    funs, neg, pos, sup = {}, {}, {}, {}
    seen = set()
    while p.at_section("substrate") or p.at_section("superstrate"):
        tok = p.advance()
        if tok.text in seen:
            raise ParseError(f"duplicate section {tok.text!r}", tok.span)
        seen.add(tok.text)
        p.advance()
        if tok.text == "substrate":
            p.declarations(funs, neg, pos)
        else:
            while p.tok.kind in ("name", "var") and p.peek().text == "/":
                for name, k in p.signatures():
                    if name in sup or name in funs or name in neg or name in pos:
                        raise ParseError(f"{name!r} declared twice", p.toks[p.i - 1].span)
                    sup[name] = k
    vocab = Vocabulary.make(funs, neg, pos, sup)
    rules: list[Rule] = []
    while p.tok.kind != "eof":
        start = p.tok.start
        head = p.atom()
        if isinstance(head, NegAtom):
            p.fail(["rule head"])
        body = TRUE
        if p.at("<-"):
            p.advance()
            body = p.formula()
        p.expect(".")
        rules.extend(rules_from_body(head, body, vocab.superstrate, p.span_from(start)))
    prog = Program(vocab, tuple(rules))
    problems = check_program(prog)
    if problems:
        raise ValidationError(problems)
    return ProgramFile(prog, distinguished)


def parse_structure(text: str, allow_reserved: bool = False) -> Structure:
    p = _Parser(text, allow_reserved)
    p.expect("universe")
    n = p.integer()
    p.expect(";")
    aliases: dict[str, int] = {}
    funs: dict[str, object] = {}
    rels: dict[str, list] = {}
    arities: dict[str, int] = {}
    positive = set()

    def element() -> int:
        t = p.tok
        if t.kind == "name" and t.text.isdigit():
            return p.integer()
        if t.kind == "name" and t.text in aliases:
            p.advance()
            return aliases[t.text]
        p.fail(["element"])

    def value():
        if p.at("["):
            p.advance()
            items = [value()]
            while p.at(","):
                p.advance()
                items.append(value())
            p.expect("]")
            return items
        return element()

    def tup() -> tuple[int, ...]:
        if not p.at("("):
            return (element(),)
        p.advance()
        items = []
        if not p.at(")"):
            items.append(element())
            while p.at(","):
                p.advance()
                items.append(element())
        p.expect(")")
        return tuple(items)

    while p.tok.kind != "eof":
        kw = p.tok
        if p.at("elem"):
            p.advance()
            name = p.ident()
            p.expect("=")
            if name.text in aliases:
                raise ParseError(f"element {name.text!r} defined twice", name.span)
            aliases[name.text] = p.integer()
        elif p.at("fun"):
            p.advance()
            name = p.ident()
            p.expect("=")
            if name.text in funs or name.text in rels:
                raise ParseError(f"duplicate block for {name.text!r}", name.span)
            funs[name.text] = value()
        elif p.at("rel", "pos"):
            if p.at("pos"):
                p.advance()
                positive_rel = True
                p.expect("rel")
            else:
                p.advance()
                positive_rel = False
            name = p.ident()
            if name.text in rels or name.text in funs:
                raise ParseError(f"duplicate block for {name.text!r}", name.span)
            if p.at("/"):
                p.advance()
                arities[name.text] = p.integer()
            p.expect("=")
            p.expect("{")
            tuples = []
            if not p.at("}"):
                tuples.append(tup())
                while p.at(","):
                    p.advance()
                    tuples.append(tup())
            p.expect("}")
            rels[name.text] = tuples
            if positive_rel:
                positive.add(name.text)
        else:
            p.fail(["'elem'", "'fun'", "'rel'", "'pos'"], kw)
        p.expect(";")

    problems = []
    for name, tuples in rels.items():
        if name not in arities:
            lengths = {len(t) for t in tuples}
            if len(lengths) > 1:
                problems.append(Diagnostic("TupleArityMismatch", f"tuples of {name!r} have differing lengths"))
            elif not lengths:
                problems.append(Diagnostic("TupleArityMismatch", f"empty relation {name!r} needs an arity"))
    for name, table in funs.items():
        try:
            arr = np.array(table, dtype=np.int64)
        except ValueError:
            problems.append(Diagnostic("MissingFunctionTable", f"table for {name!r} is ragged"))
            continue
        if arr.shape != (n,) * arr.ndim:
            problems.append(Diagnostic("MissingFunctionTable", f"table for {name!r} is incomplete"))
    if problems:
        raise ValidationError(problems)
    s = Structure.make(n, funs, rels, positive, arities)
    problems = validate_structure(s)
    if problems:
        raise ValidationError(problems)
    return s


# --------------------------------------------------------------------------
# printing


def print_term(t: Term) -> str:
    return str(t)


def _args(args) -> str:
    return f"({', '.join(map(print_term, args))})" if args else ""


def _atom(f: Union[Atom, NegAtom]) -> str:
    if f.pred == EQ:
        op = "=" if isinstance(f, Atom) else "!="
        return f"{print_term(f.args[0])} {op} {print_term(f.args[1])}"
    text = f.pred + _args(f.args)
    return text if isinstance(f, Atom) else "!" + text


def print_formula(f: Formula) -> str:
    return _fmt(f, 0)


# precedence levels: 0 top, 1 operand of |, 2 operand of &
def _fmt(f: Formula, level: int) -> str:
    if isinstance(f, (Atom, NegAtom)):
        return _atom(f)
    if isinstance(f, And):
        if not f.items:
            return "true"
        text = " & ".join(_fmt(g, 3) for g in f.items)
        return f"({text})" if level >= 3 else text
    if isinstance(f, Or):
        if not f.items:
            return "false"
        text = " | ".join(_fmt(g, 2) for g in f.items)
        return f"({text})" if level >= 2 else text
    if isinstance(f, Exists):
        names = [f.var]
        body = f.body
        while isinstance(body, Exists):
            names.append(body.var)
            body = body.body
        return f"exists {' '.join(names)} ({_fmt(body, 0)})"
    if isinstance(f, Let):
        clauses = ", ".join(_clause(c) for c in f.clauses)
        text = f"let {clauses} then {_fmt(f.body, 0)}"
        return f"({text})" if level >= 1 else text
    raise TypeError(f"not a formula: {f!r}")


def _clause(c: Clause) -> str:
    head = f"{c.pred}({', '.join(c.head)})" if c.head else c.pred
    return f"{head} <- {_fmt(c.body, 1 if isinstance(c.body, Let) else 0)}"


def _sigs(items: dict[str, int]) -> str:
    return ", ".join(f"{k}/{v}" for k, v in sorted(items.items()))


def print_vocabulary_decls(v: Vocabulary, indent: str = "  ") -> list[str]:
    lines = []
    neg = {k: a for k, (a, ng) in v.predicates.items() if ng and k != EQ and k not in v.superstrate}
    pos = {k: a for k, (a, ng) in v.predicates.items() if not ng and k not in v.superstrate}
    if v.functions:
        lines.append(f"{indent}fun {_sigs(dict(v.functions))}.")
    if neg:
        lines.append(f"{indent}neg {_sigs(neg)}.")
    if pos:
        lines.append(f"{indent}pos {_sigs(pos)}.")
    return lines


def print_formula_file(f: Formula, vocab: Vocabulary) -> str:
    lines = ["vocabulary:", *print_vocabulary_decls(vocab), print_formula(f)]
    return "\n".join(lines) + "\n"


def print_rule(r: Rule) -> str:
    head = _atom(r.head)
    items = [_atom(a) for a in r.atoms]
    if r.constraint is not None:
        c = r.constraint
        parts = c.items if isinstance(c, And) and c.items else (c,)
        items.extend(_fmt(g, 3) for g in parts)
    if not items:
        return f"{head}."
    if len(items) == 1 and isinstance(r.constraint, Or) and r.constraint.items:
        # a bare disjunction would read back as several rules
        items = ["true", items[0]]
    return f"{head} <- {' & '.join(items)}."


def print_program(p: Program, distinguished: Atom | None = None) -> str:
    lines = []
    if distinguished is not None:
        lines.append(f"distinguished: {_atom(distinguished)}")
    lines.append("substrate:")
    lines.extend(print_vocabulary_decls(p.vocab))
    lines.append("superstrate:")
    sup = p.vocab.superstrate_arities()
    if sup:
        lines.append(f"  {_sigs(sup)}.")
    lines.extend(print_rule(r) for r in p.rules)
    return "\n".join(lines) + "\n"


def _table(arr: np.ndarray) -> str:
    if arr.ndim == 0:
        return str(int(arr))
    return "[" + ", ".join(_table(a) for a in arr) + "]"


def print_tuple(t) -> str:
    return "(" + ",".join(str(x) for x in t) + ")"


def print_relation(tuples) -> str:
    return "{" + ",".join(print_tuple(t) for t in sorted(tuples)) + "}"


def print_structure(s: Structure) -> str:
    lines = [f"universe {s.n};"]
    for name in sorted(s.functions):
        lines.append(f"fun {name} = {_table(s.functions[name])};")
    for name in sorted(s.relations):
        k, tuples = s.relations[name]
        kw = "pos rel" if name in s.positive else "rel"
        lines.append(f"{kw} {name}/{k} = {print_relation(tuples)};")
    return "\n".join(lines) + "\n"


def to_text(x) -> str:
    """Canonical text of a formula, program or structure."""
    if isinstance(x, Program):
        return print_program(x)
    if isinstance(x, Structure):
        return print_structure(x)
    return print_formula(x)


__all__ = [
    "ParseError", "ProgramFile", "parse_formula", "parse_formula_file", "parse_program", "parse_program_file",
    "parse_structure", "print_formula", "print_formula_file", "print_program", "print_rule", "print_structure",
    "print_relation", "print_tuple", "to_text", "rules_from_body", "tokenize", "FALSE",
]
