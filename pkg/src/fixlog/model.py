"""Vocabularies, terms, formulas, rules and programs.

All AST nodes are frozen dataclasses.  Source spans attached by the parser
are carried along for diagnostics but never take part in equality.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union

EQ = "="
RESERVED = "_g"
_SUFFIX = re.compile(r"_g\d+$")


class FixlogError(Exception):
    """Base class for all errors raised by this package."""


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    path: str = ""
    span: SourceSpan | None = None

    def __str__(self) -> str:
        where = f" at {self.path}" if self.path else ""
        if self.span is not None:
            where += f" [{self.span.start}:{self.span.end}]"
        return f"{self.code}{where}: {self.message}"


class ValidationError(FixlogError):
    def __init__(self, diagnostics: Sequence[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))

    @property
    def codes(self) -> list[str]:
        return [d.code for d in self.diagnostics]


class ClashWithExistingName(FixlogError):
    pass


# --------------------------------------------------------------------------
# vocabulary


@dataclass(frozen=True, eq=True)
class Vocabulary:
    """Function and predicate symbols.

    ``predicates`` maps a name to ``(arity, negatable)``.  ``superstrate`` is
    the set of predicate names computed by a program; it is empty for plain
    formula vocabularies.  Use :meth:`make` so that ``=`` is always present.
    """

    functions: Mapping[str, int]
    predicates: Mapping[str, tuple[int, bool]]
    superstrate: frozenset[str] = frozenset()

    @classmethod
    def make(cls, functions=None, negatable=None, positive=None, superstrate=None) -> "Vocabulary":
        preds: dict[str, tuple[int, bool]] = {EQ: (2, True)}
        for name, k in dict(negatable or {}).items():
            preds[name] = (k, True)
        for name, k in dict(positive or {}).items():
            preds[name] = (k, False)
        sup = dict(superstrate or {})
        for name, k in sup.items():
            preds[name] = (k, False)
        return cls(dict(functions or {}), preds, frozenset(sup))

    def names(self) -> set[str]:
        return set(self.functions) | set(self.predicates)

    def arity(self, pred: str) -> int:
        return self.predicates[pred][0]

    def is_negatable(self, pred: str) -> bool:
        return self.predicates[pred][1]

    def substrate(self) -> "Vocabulary":
        preds = {p: v for p, v in self.predicates.items() if p not in self.superstrate}
        return Vocabulary(dict(self.functions), preds)

    def superstrate_arities(self) -> dict[str, int]:
        return {p: self.predicates[p][0] for p in sorted(self.superstrate)}

    def problems(self) -> list[Diagnostic]:
        out = []
        for name in set(self.functions) & set(self.predicates):
            out.append(Diagnostic("DuplicateSymbol", f"{name!r} is both a function and a predicate"))
        if self.predicates.get(EQ) != (2, True) or EQ in self.superstrate:
            out.append(Diagnostic("BadEquality", "'=' must be a binary negatable substrate predicate"))
        for name in self.superstrate:
            if name not in self.predicates:
                out.append(Diagnostic("UndeclaredSymbol", f"superstrate symbol {name!r} is not a predicate"))
            elif self.predicates[name][1]:
                out.append(Diagnostic("NegatableSuperstrate", f"superstrate predicate {name!r} must be positive"))
        return out


# --------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Var:
    name: str
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple["Term", ...] = ()
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        if not self.args:
            return self.fn
        return f"{self.fn}({', '.join(map(str, self.args))})"


Term = Union[Var, App]


def term_vars(t: Term) -> Iterator[str]:
    if isinstance(t, Var):
        yield t.name
    else:
        for a in t.args:
            yield from term_vars(a)


def term_functions(t: Term) -> Iterator[str]:
    if isinstance(t, App):
        yield t.fn
        for a in t.args:
            yield from term_functions(a)


def subst_term(t: Term, binding: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return binding.get(t.name, t)
    if not t.args:
        return t
    return App(t.fn, tuple(subst_term(a, binding) for a in t.args), t.span)


# --------------------------------------------------------------------------
# formulas


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class NegAtom:
    pred: str
    args: tuple[Term, ...] = ()
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class And:
    items: tuple["Formula", ...] = ()
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Or:
    items: tuple["Formula", ...] = ()
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Clause:
    pred: str
    head: tuple[str, ...]
    body: "Formula"
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, eq=False)
class Let:
    """LET clauses THEN body.  Clause order is irrelevant to equality."""

    clauses: tuple[Clause, ...]
    body: "Formula"
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Let):
            return NotImplemented
        return self.body == other.body and frozenset(self.clauses) == frozenset(other.clauses) \
            and len(self.clauses) == len(other.clauses)

    def __hash__(self) -> int:
        return hash((frozenset(self.clauses), self.body))


Formula = Union[Atom, NegAtom, And, Or, Exists, Let]
Literal = Union[Atom, NegAtom]

TRUE = And(())
FALSE = Or(())


def conj(items: Iterable[Formula]) -> Formula:
    """Conjunction that flattens nested Ands and collapses singletons."""
    out: list[Formula] = []
    for f in items:
        out.extend(f.items if isinstance(f, And) else (f,))
    return out[0] if len(out) == 1 else And(tuple(out))


def disj(items: Iterable[Formula]) -> Formula:
    out: list[Formula] = []
    for f in items:
        out.extend(f.items if isinstance(f, Or) else (f,))
    return out[0] if len(out) == 1 else Or(tuple(out))


def exists_many(variables: Sequence[str], body: Formula) -> Formula:
    for v in reversed(variables):
        body = Exists(v, body)
    return body


def eq(a: Term, b: Term) -> Atom:
    return Atom(EQ, (a, b))


# --------------------------------------------------------------------------
# rules and programs


@dataclass(frozen=True)
class Rule:
    """``head <- atoms & constraint``.

    ``atoms`` are the superstrate atoms of the body; ``constraint`` is the
    quantifier-free substrate part, or None.
    """

    head: Atom
    atoms: tuple[Atom, ...] = ()
    constraint: Formula | None = None
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def body_items(self) -> tuple[Formula, ...]:
        items: list[Formula] = list(self.atoms)
        if self.constraint is not None:
            c = self.constraint
            items.extend(c.items if isinstance(c, And) else (c,))
        return tuple(items)

    def body(self) -> Formula:
        return conj(self.body_items()) if self.body_items() else TRUE

    def variables(self) -> list[str]:
        seen: dict[str, None] = {}
        for t in self.head.args:
            seen.update(dict.fromkeys(term_vars(t)))
        for f in self.body_items():
            seen.update(dict.fromkeys(all_vars(f)))
        return list(seen)


@dataclass(frozen=True, eq=False)
class Program:
    vocab: Vocabulary
    rules: tuple[Rule, ...]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Program):
            return NotImplemented
        return self.vocab == other.vocab and frozenset(self.rules) == frozenset(other.rules)

    def __hash__(self) -> int:
        return hash(frozenset(self.rules))

    def rules_for(self, pred: str) -> list[Rule]:
        return [r for r in self.rules if r.head.pred == pred]


# --------------------------------------------------------------------------
# traversal helpers


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, (And, Or)):
        for g in f.items:
            yield from subformulas(g)
    elif isinstance(f, Exists):
        yield from subformulas(f.body)
    elif isinstance(f, Let):
        for c in f.clauses:
            yield from subformulas(c.body)
        yield from subformulas(f.body)


def all_vars(f: Formula) -> Iterator[str]:
    """Every variable name occurring in f, bound or free, in textual order."""
    for g in subformulas(f):
        if isinstance(g, (Atom, NegAtom)):
            for t in g.args:
                yield from term_vars(t)
        elif isinstance(g, Exists):
            yield g.var
        elif isinstance(g, Let):
            for c in g.clauses:
                yield from c.head


def symbols(f: Formula) -> set[str]:
    """All function and predicate names occurring in f, LET-bound included."""
    out: set[str] = set()
    for g in subformulas(f):
        if isinstance(g, (Atom, NegAtom)):
            out.add(g.pred)
            for t in g.args:
                out.update(term_functions(t))
        elif isinstance(g, Let):
            out.update(c.pred for c in g.clauses)
    return out


def let_predicates(f: Formula) -> set[str]:
    return {c.pred for g in subformulas(f) if isinstance(g, Let) for c in g.clauses}


def free_vars(f: Formula) -> set[str]:
    if isinstance(f, (Atom, NegAtom)):
        return {v for t in f.args for v in term_vars(t)}
    if isinstance(f, (And, Or)):
        return set().union(*(free_vars(g) for g in f.items))
    if isinstance(f, Exists):
        return free_vars(f.body) - {f.var}
    if isinstance(f, Let):
        out = free_vars(f.body)
        for c in f.clauses:
            out |= free_vars(c.body) - set(c.head)
        return out
    raise TypeError(f"not a formula: {f!r}")


def fresh_symbol(base: str, avoid: Iterable[str]) -> str:
    """Smallest ``base_gN`` not in ``avoid``; an existing ``_gN`` suffix is dropped first."""
    avoid = set(avoid)
    base = _SUFFIX.sub("", base)
    for i in itertools.count():
        cand = f"{base}{RESERVED}{i}"
        if cand not in avoid:
            return cand
    raise AssertionError("unreachable")


def fresh_names(base: str, count: int, avoid: Iterable[str]) -> list[str]:
    used = set(avoid)
    out = []
    for _ in range(count):
        name = fresh_symbol(base, used)
        used.add(name)
        out.append(name)
    return out


# --------------------------------------------------------------------------
# substitution and renaming


def substitute(f: Formula, binding: Mapping[str, Term]) -> Formula:
    """Simultaneous capture-avoiding substitution of terms for free variables."""
    binding = {k: v for k, v in binding.items() if not (isinstance(v, Var) and v.name == k)}
    if not binding:
        return f
    return _subst(f, binding)


def _subst(f: Formula, binding: Mapping[str, Term]) -> Formula:
    live = {k: v for k, v in binding.items() if k in free_vars(f)}
    if not live:
        return f
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(subst_term(t, live) for t in f.args), f.span)
    if isinstance(f, NegAtom):
        return NegAtom(f.pred, tuple(subst_term(t, live) for t in f.args), f.span)
    if isinstance(f, And):
        return And(tuple(_subst(g, live) for g in f.items), f.span)
    if isinstance(f, Or):
        return Or(tuple(_subst(g, live) for g in f.items), f.span)
    if isinstance(f, Exists):
        (var,), body = _rebind((f.var,), f.body, live)
        return Exists(var, _subst(body, live), f.span)
    if isinstance(f, Let):
        clauses = []
        for c in f.clauses:
            inner = {k: v for k, v in live.items() if k not in c.head}
            head, body = _rebind(c.head, c.body, inner)
            clauses.append(Clause(c.pred, head, _subst(body, inner) if inner else body, c.span))
        return Let(tuple(clauses), _subst(f.body, live), f.span)
    raise TypeError(f"not a formula: {f!r}")


def _rebind(bound: tuple[str, ...], body: Formula, binding: Mapping[str, Term]):
    """Rename binders in ``bound`` that would capture a variable of ``binding``'s values."""
    inner = {k: v for k, v in binding.items() if k not in bound and k in free_vars(body)}
    incoming = {v for t in inner.values() for v in term_vars(t)}
    clash = [b for b in bound if b in incoming]
    if not clash:
        return bound, body
    avoid = incoming | set(binding) | set(all_vars(body)) | set(bound)
    renaming: dict[str, Term] = {}
    for b in clash:
        new = fresh_symbol(b, avoid)
        avoid.add(new)
        renaming[b] = Var(new)
    new_bound = tuple(renaming[b].name if b in renaming else b for b in bound)
    return new_bound, _subst(body, renaming)


def map_atoms(f: Formula, fn) -> Formula:
    """Rebuild f with every Atom/NegAtom replaced by ``fn(atom)``."""
    if isinstance(f, (Atom, NegAtom)):
        return fn(f)
    if isinstance(f, And):
        return And(tuple(map_atoms(g, fn) for g in f.items), f.span)
    if isinstance(f, Or):
        return Or(tuple(map_atoms(g, fn) for g in f.items), f.span)
    if isinstance(f, Exists):
        return Exists(f.var, map_atoms(f.body, fn), f.span)
    if isinstance(f, Let):
        return Let(tuple(Clause(c.pred, c.head, map_atoms(c.body, fn), c.span) for c in f.clauses),
                   map_atoms(f.body, fn), f.span)
    raise TypeError(f"not a formula: {f!r}")


def rename_let_predicates(f: Formula, mapping: Mapping[str, str], vocab: Vocabulary | None = None) -> Formula:
    """Rename LET-bound predicates.  Targets must not already be in use."""
    mapping = {k: v for k, v in mapping.items() if k != v}
    if not mapping:
        return f
    if len(set(mapping.values())) != len(mapping):
        raise ClashWithExistingName("renaming is not injective")
    taken = symbols(f) - set(mapping)
    if vocab is not None:
        taken |= vocab.names()
    for target in mapping.values():
        if target in taken:
            raise ClashWithExistingName(f"{target!r} is already in use")
    return _rename_preds(f, mapping)


def _rename_preds(f: Formula, mapping: Mapping[str, str]) -> Formula:
    def ren(a):
        return type(a)(mapping.get(a.pred, a.pred), a.args, a.span)

    g = map_atoms(f, ren)
    return _rename_clause_heads(g, mapping)


def _rename_clause_heads(f: Formula, mapping: Mapping[str, str]) -> Formula:
    if isinstance(f, (Atom, NegAtom)):
        return f
    if isinstance(f, And):
        return And(tuple(_rename_clause_heads(g, mapping) for g in f.items), f.span)
    if isinstance(f, Or):
        return Or(tuple(_rename_clause_heads(g, mapping) for g in f.items), f.span)
    if isinstance(f, Exists):
        return Exists(f.var, _rename_clause_heads(f.body, mapping), f.span)
    return Let(tuple(Clause(mapping.get(c.pred, c.pred), c.head, _rename_clause_heads(c.body, mapping), c.span)
                     for c in f.clauses),
               _rename_clause_heads(f.body, mapping), f.span)


# --------------------------------------------------------------------------
# well-formedness


def _check_terms(args, vocab: Vocabulary, path: str, span, out: list[Diagnostic]) -> None:
    for i, t in enumerate(args):
        _check_term(t, vocab, f"{path}/arg{i}", span, out)


def _check_term(t: Term, vocab: Vocabulary, path: str, span, out: list[Diagnostic]) -> None:
    if isinstance(t, Var):
        return
    sp = t.span or span
    if t.fn not in vocab.functions:
        out.append(Diagnostic("UndeclaredSymbol", f"function {t.fn!r} is not declared", path, sp))
    elif vocab.functions[t.fn] != len(t.args):
        out.append(Diagnostic("ArityMismatch",
                              f"{t.fn!r} takes {vocab.functions[t.fn]} arguments, got {len(t.args)}", path, sp))
    _check_terms(t.args, vocab, path, sp, out)


def check_formula(f: Formula, vocab: Vocabulary) -> list[Diagnostic]:
    """Return the list of well-formedness violations of f (empty means ok)."""
    out: list[Diagnostic] = list(vocab.problems())
    _check(f, vocab, {}, "", out)
    return out


def _check(f: Formula, vocab: Vocabulary, scope: dict[str, int], path: str, out: list[Diagnostic]) -> None:
    if isinstance(f, (Atom, NegAtom)):
        kind = "atom" if isinstance(f, Atom) else "neg"
        here = f"{path}/{kind}"
        if f.pred in scope:
            arity = scope[f.pred]
            if isinstance(f, NegAtom):
                out.append(Diagnostic("NegationOfPositive",
                                      f"LET-bound predicate {f.pred!r} cannot be negated", here, f.span))
        elif f.pred in vocab.predicates:
            arity = vocab.arity(f.pred)
            if isinstance(f, NegAtom) and not vocab.is_negatable(f.pred):
                out.append(Diagnostic("NegationOfPositive",
                                      f"predicate {f.pred!r} is positive and cannot be negated", here, f.span))
        else:
            out.append(Diagnostic("UndeclaredSymbol", f"predicate {f.pred!r} is not declared", here, f.span))
            arity = None
        if arity is not None and arity != len(f.args):
            out.append(Diagnostic("ArityMismatch",
                                  f"{f.pred!r} takes {arity} arguments, got {len(f.args)}", here, f.span))
        _check_terms(f.args, vocab, here, f.span, out)
    elif isinstance(f, (And, Or)):
        tag = "and" if isinstance(f, And) else "or"
        for i, g in enumerate(f.items):
            _check(g, vocab, scope, f"{path}/{tag}{i}", out)
    elif isinstance(f, Exists):
        _check(f.body, vocab, scope, f"{path}/exists", out)
    elif isinstance(f, Let):
        here = f"{path}/let"
        names = [c.pred for c in f.clauses]
        for name in sorted({n for n in names if names.count(n) > 1}):
            out.append(Diagnostic("DuplicateLetPredicate", f"{name!r} is bound twice", here, f.span))
        inner = dict(scope)
        for i, c in enumerate(f.clauses):
            if c.pred in vocab.names() or c.pred in scope:
                out.append(Diagnostic("LetPredicateShadowsVocabulary",
                                      f"LET predicate {c.pred!r} is already in scope", f"{here}/clause{i}",
                                      c.span or f.span))
            if len(set(c.head)) != len(c.head):
                out.append(Diagnostic("NonDistinctHeadVariables",
                                      f"head variables of {c.pred!r} are not distinct", f"{here}/clause{i}",
                                      c.span or f.span))
            inner[c.pred] = len(c.head)
        for i, c in enumerate(f.clauses):
            _check(c.body, vocab, inner, f"{here}/clause{i}", out)
        _check(f.body, vocab, inner, f"{here}/then", out)
    else:
        raise TypeError(f"not a formula: {f!r}")


def check_program(p: Program) -> list[Diagnostic]:
    out: list[Diagnostic] = list(p.vocab.problems())
    v = p.vocab
    for i, r in enumerate(p.rules):
        here = f"/rule{i}"
        h = r.head
        if h.pred not in v.superstrate:
            code = "UndeclaredSymbol" if h.pred not in v.predicates else "SubstrateHead"
            out.append(Diagnostic(code, f"rule head {h.pred!r} is not a superstrate predicate", here, h.span))
        elif v.arity(h.pred) != len(h.args):
            out.append(Diagnostic("ArityMismatch",
                                  f"{h.pred!r} takes {v.arity(h.pred)} arguments, got {len(h.args)}", here, h.span))
        _check_terms(h.args, v, here, h.span, out)
        for j, a in enumerate(r.atoms):
            sub = f"{here}/atom{j}"
            if not isinstance(a, Atom):
                out.append(Diagnostic("NegatedSuperstrateAtom", "superstrate atoms must be positive", sub, a.span))
                continue
            if a.pred not in v.superstrate:
                code = "UndeclaredSymbol" if a.pred not in v.predicates else "SubstrateInSuperstratePart"
                out.append(Diagnostic(code, f"{a.pred!r} is not a superstrate predicate", sub, a.span))
            elif v.arity(a.pred) != len(a.args):
                out.append(Diagnostic("ArityMismatch",
                                      f"{a.pred!r} takes {v.arity(a.pred)} arguments, got {len(a.args)}",
                                      sub, a.span))
            _check_terms(a.args, v, sub, a.span, out)
        if r.constraint is not None:
            _check_constraint(r.constraint, v, f"{here}/constraint", out)
    return out


def _check_constraint(f: Formula, v: Vocabulary, path: str, out: list[Diagnostic]) -> None:
    if isinstance(f, (Exists, Let)):
        out.append(Diagnostic("QuantifierInRuleBody", "rule bodies must be quantifier-free", path, f.span))
        return
    if isinstance(f, (And, Or)):
        for i, g in enumerate(f.items):
            _check_constraint(g, v, f"{path}/{i}", out)
        return
    if f.pred in v.superstrate:
        if isinstance(f, NegAtom):
            out.append(Diagnostic("NegatedSuperstrateAtom",
                                  f"superstrate predicate {f.pred!r} occurs negated", path, f.span))
        else:
            out.append(Diagnostic("SuperstrateInSubstratePart",
                                  f"superstrate predicate {f.pred!r} occurs in the substrate part", path, f.span))
        return
    _check(f, v.substrate(), {}, path, out)


def infer_vocabulary(f: Formula) -> Vocabulary:
    """Vocabulary of the free symbols of f; every predicate is taken as negatable."""
    funs: dict[str, int] = {}
    preds: dict[str, int] = {}

    def terms(args):
        for t in args:
            if isinstance(t, App):
                funs.setdefault(t.fn, len(t.args))
                terms(t.args)

    def walk(g: Formula, scope: frozenset[str]):
        if isinstance(g, (Atom, NegAtom)):
            if g.pred not in scope and g.pred != EQ:
                preds.setdefault(g.pred, len(g.args))
            terms(g.args)
        elif isinstance(g, (And, Or)):
            for h in g.items:
                walk(h, scope)
        elif isinstance(g, Exists):
            walk(g.body, scope)
        else:
            inner = scope | {c.pred for c in g.clauses}
            for c in g.clauses:
                walk(c.body, inner)
            walk(g.body, inner)

    walk(f, frozenset())
    return Vocabulary.make(functions=funs, negatable=preds)
