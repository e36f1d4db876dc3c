"""Uniform translations between logic programs and EFPL formulas.

``program_to_formula`` turns a program into a single LET whose clause
bodies are existential first-order formulas.  ``formula_to_program`` goes
the other way through a normal form: one flat LET with existential clause
bodies whose only free variables are the clause heads.

The steps live on :class:`Translator` so that the harness can substitute a
deliberately broken step and confirm the checks notice.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Sequence

from .model import (
    FALSE, TRUE, And, App, Atom, Clause, Diagnostic, Exists, FixlogError, Formula, Let, Literal, NegAtom, Or,
    Program, Rule, ValidationError, Var, Vocabulary, all_vars, check_formula, conj, eq, exists_many,
    fresh_names, fresh_symbol, free_vars, infer_vocabulary, map_atoms, let_predicates, substitute, subformulas,
    symbols,
)
from .model import _rename_preds


class UnknownTarget(FixlogError):
    pass


@dataclass(frozen=True)
class NormalForm:
    """LET clauses THEN body, clause bodies and body existential first-order."""

    clauses: tuple[Clause, ...]
    body: Formula

    def as_formula(self) -> Formula:
        return Let(self.clauses, self.body) if self.clauses else self.body

    def problems(self) -> list[str]:
        out = []
        for c in self.clauses:
            if any(isinstance(g, Let) for g in subformulas(c.body)):
                out.append(f"clause {c.pred} contains a LET")
            extra = free_vars(c.body) - set(c.head)
            if extra:
                out.append(f"clause {c.pred} has extraneous free variables {sorted(extra)}")
        if any(isinstance(g, Let) for g in subformulas(self.body)):
            out.append("body contains a LET")
        names = [c.pred for c in self.clauses]
        if len(set(names)) != len(names):
            out.append("clause predicates are not distinct")
        return out


@dataclass(frozen=True)
class TranslationResult:
    program: Program
    predicate: str
    variables: tuple[str, ...]

    @property
    def atom(self) -> Atom:
        return Atom(self.predicate, tuple(Var(v) for v in self.variables))


class _Names:
    def __init__(self, used: Iterable[str]):
        self.used = set(used)

    def fresh(self, base: str) -> str:
        name = fresh_symbol(base, self.used)
        self.used.add(name)
        return name


def _nf_rename(nf: NormalForm, mapping: Mapping[str, str]) -> NormalForm:
    if not mapping:
        return nf
    g = _rename_preds(Let(nf.clauses, nf.body), mapping)
    return NormalForm(g.clauses, g.body)


def _rename_apart(parts: Sequence[NormalForm], names: _Names, taken: Iterable[str] = ()) -> list[NormalForm]:
    seen = set(taken)
    out = []
    for part in parts:
        mapping = {c.pred: names.fresh(c.pred) for c in part.clauses if c.pred in seen}
        part = _nf_rename(part, mapping)
        seen.update(c.pred for c in part.clauses)
        out.append(part)
    return out


def _rename_binders(f: Formula, clash: set[str], avoid: set[str]) -> Formula:
    """Rename every Exists binder whose name is in ``clash``."""
    if isinstance(f, (Atom, NegAtom)):
        return f
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_rename_binders(g, clash, avoid) for g in f.items), f.span)
    if isinstance(f, Exists):
        body = f.body
        var = f.var
        if var in clash:
            new = fresh_symbol(var, avoid | set(all_vars(body)))
            avoid.add(new)
            body = substitute(body, {var: Var(new)})
            var = new
        return Exists(var, _rename_binders(body, clash, avoid), f.span)
    if isinstance(f, Let):
        raise ValueError("expected a LET-free formula")
    raise TypeError(f"not a formula: {f!r}")


def _body_items(constraint: Formula | None) -> list[Formula]:
    if constraint is None:
        return []
    return list(constraint.items) if isinstance(constraint, And) else [constraint]


def _dnf(f: Formula) -> list[list[Literal]]:
    if isinstance(f, (Atom, NegAtom)):
        return [[f]]
    if isinstance(f, And):
        out: list[list[Literal]] = [[]]
        for g in f.items:
            out = [a + b for a, b in product(out, _dnf(g))]
        return out
    if isinstance(f, Or):
        return [d for g in f.items for d in _dnf(g)]
    raise ValueError(f"expected a quantifier-free formula, got {type(f).__name__}")


class Translator:
    # ------------------------------------------------------------------
    # programs to formulas

    def flatten_heads(self, p: Program) -> Program:
        """Make every head ``R(X_g0, ..., X_gk)``, moving head terms into body equalities."""
        used = {v for r in p.rules for v in r.variables()}
        width = max((len(r.head.args) for r in p.rules), default=0)
        canon = fresh_names("X", width, used)
        rules = []
        for r in p.rules:
            hv = canon[:len(r.head.args)]
            eqs = [eq(Var(x), t) for x, t in zip(hv, r.head.args)]
            constraint = conj(_body_items(r.constraint) + eqs) if (r.constraint is not None or eqs) else None
            rules.append(Rule(Atom(r.head.pred, tuple(Var(x) for x in hv)), r.atoms, constraint, r.span))
        return Program(p.vocab, tuple(rules))

    def merge_rules(self, p: Program) -> dict[str, tuple[tuple[str, ...], Formula]]:
        """One disjunctive body per superstrate predicate; ``false`` where no rule applies."""
        out = {}
        for pred, k in p.vocab.superstrate_arities().items():
            rules = p.rules_for(pred)
            heads = {tuple(getattr(t, "name", None) for t in r.head.args) for r in rules}
            if len(heads) > 1 or any(None in h for h in heads):
                raise ValueError(f"heads of {pred!r} are not flattened")
            head = heads.pop() if heads else tuple(fresh_names("X", k, ()))
            bodies = [r.body() for r in rules]
            out[pred] = (head, bodies[0] if len(bodies) == 1 else Or(tuple(bodies)))
        return out

    def quantify_bodies(self, merged: Mapping[str, tuple[tuple[str, ...], Formula]]):
        """Existentially close each body over its non-head variables."""
        def close(head, body):
            extra = [v for v in dict.fromkeys(all_vars(body)) if v in free_vars(body) and v not in head]
            return exists_many(extra, body)

        out = {}
        for pred, (head, body) in merged.items():
            if isinstance(body, Or):
                body = Or(tuple(close(head, b) for b in body.items), body.span)
            else:
                body = close(head, body)
            out[pred] = (head, body)
        return out

    def program_to_formula(self, p: Program, target: str) -> Formula:
        if target not in p.vocab.superstrate:
            raise UnknownTarget(f"{target!r} is not a superstrate predicate")
        merged = self.quantify_bodies(self.merge_rules(self.flatten_heads(p)))
        clauses = tuple(Clause(q, head, body) for q, (head, body) in merged.items())
        head = merged[target][0]
        return Let(clauses, Atom(target, tuple(Var(v) for v in head)))

    # ------------------------------------------------------------------
    # formulas to normal form

    def normalize(self, f: Formula) -> NormalForm:
        names = _Names(symbols(f))
        return self._normalize(f, names)

    def _normalize(self, f: Formula, names: _Names) -> NormalForm:
        if isinstance(f, (Atom, NegAtom)):
            return NormalForm((), f)
        if isinstance(f, (And, Or)):
            parts = _rename_apart([self._normalize(g, names) for g in f.items], names)
            clauses = tuple(c for part in parts for c in part.clauses)
            return NormalForm(clauses, type(f)(tuple(part.body for part in parts), f.span))
        if isinstance(f, Exists):
            inner = self._normalize(f.body, names)
            return NormalForm(inner.clauses, Exists(f.var, inner.body, f.span))
        if isinstance(f, Let):
            outer = {c.pred for c in f.clauses}
            parts = [self._normalize(c.body, names) for c in f.clauses]
            parts.append(self._normalize(f.body, names))
            parts = _rename_apart(parts, names, outer)
            nested = Let(tuple(Clause(c.pred, c.head, part.as_formula(), c.span) for c, part in zip(f.clauses, parts)),
                         parts[-1].as_formula(), f.span)
            flat = self._flatten_let(nested, names)
            clauses, body = self._eliminate_parameters(flat.clauses, flat.body, names)
            return NormalForm(tuple(clauses), body)
        raise TypeError(f"not a formula: {f!r}")

    def flatten_let(self, f: Let) -> NormalForm:
        """Hoist the LET clauses of every clause body and of the body into one clause list."""
        return self._flatten_let(f, _Names(symbols(f)))

    def _flatten_let(self, f: Let, names: _Names) -> NormalForm:
        def split(g: Formula) -> NormalForm:
            if isinstance(g, Let):
                return NormalForm(g.clauses, g.body)
            return NormalForm((), g)

        parts = [split(c.body) for c in f.clauses] + [split(f.body)]
        parts = _rename_apart(parts, names, {c.pred for c in f.clauses})
        clauses = [Clause(c.pred, c.head, part.body, c.span) for c, part in zip(f.clauses, parts)]
        for part in parts:
            clauses.extend(part.clauses)
        return NormalForm(tuple(clauses), parts[-1].body)

    def eliminate_parameters(self, clauses: Sequence[Clause], body: Formula,
                             avoid: Iterable[str] = ()) -> tuple[tuple[Clause, ...], Formula]:
        """Widen each clause predicate by the outer variables its recursion depends on."""
        used = set(avoid) | symbols(Let(tuple(clauses), body))
        return self._eliminate_parameters(clauses, body, _Names(used))

    def _eliminate_parameters(self, clauses, body, names: _Names):
        clauses = list(clauses)
        params = set().union(*(free_vars(c.body) - set(c.head) for c in clauses)) if clauses else set()
        if not params:
            return tuple(clauses), body
        everything = params | {v for c in clauses for v in all_vars(c.body)} | set(all_vars(body))
        everything |= {v for c in clauses for v in c.head}
        # keep appended parameters from being captured by heads or binders
        renamed = []
        for c in clauses:
            head = list(c.head)
            cbody = c.body
            for i, h in enumerate(head):
                if h in params:
                    new = fresh_symbol(h, everything)
                    everything.add(new)
                    cbody = substitute(cbody, {h: Var(new)})
                    head[i] = new
            renamed.append(Clause(c.pred, tuple(head), _rename_binders(cbody, params, everything), c.span))
        body = _rename_binders(body, params, everything)
        clauses = renamed

        preds = {c.pred for c in clauses}
        extra = {c.pred: free_vars(c.body) - set(c.head) for c in clauses}
        refs = {c.pred: {g.pred for g in subformulas(c.body) if isinstance(g, Atom) and g.pred in preds}
                for c in clauses}
        changed = True
        while changed:
            changed = False
            for p in extra:
                grown = extra[p].union(*(extra[q] for q in refs[p]))
                if grown != extra[p]:
                    extra[p] = grown
                    changed = True
        order = {p: tuple(sorted(vs)) for p, vs in extra.items()}
        new_name = {p: names.fresh(p) for p in preds if order[p]}

        def widen(a):
            if isinstance(a, Atom) and a.pred in new_name:
                return Atom(new_name[a.pred], a.args + tuple(Var(v) for v in order[a.pred]), a.span)
            return a

        out = tuple(Clause(new_name.get(c.pred, c.pred), c.head + order[c.pred], map_atoms(c.body, widen), c.span)
                    for c in clauses)
        return out, map_atoms(body, widen)

    def alias_then(self, nf: NormalForm, variables: Sequence[str] | None = None) -> NormalForm:
        """Replace the body by a fresh predicate ``Q_gN`` defined by one non-recursive clause."""
        fv = free_vars(nf.body)
        if variables is None:
            variables = sorted(fv)
        variables = tuple(variables)
        if len(set(variables)) != len(variables) or not fv <= set(variables):
            raise ValueError("variables must be distinct and cover the free variables of the body")
        q = fresh_symbol("Q", symbols(nf.as_formula()))
        clause = Clause(q, variables, nf.body)
        return NormalForm(nf.clauses + (clause,), Atom(q, tuple(Var(v) for v in variables)))

    def prenex_dnf(self, f: Formula, avoid: Iterable[str] = ()) -> tuple[tuple[str, ...], list[list[Literal]]]:
        """Pull quantifiers to the front, renaming apart, and expand the matrix into DNF."""
        taken = set(free_vars(f)) | set(avoid)
        everything = set(all_vars(f)) | taken
        prefix: list[str] = []

        def pull(g: Formula) -> Formula:
            if isinstance(g, (Atom, NegAtom)):
                return g
            if isinstance(g, (And, Or)):
                return type(g)(tuple(pull(h) for h in g.items), g.span)
            if isinstance(g, Exists):
                var, body = g.var, g.body
                if var in taken:
                    new = fresh_symbol(var, everything)
                    everything.add(new)
                    body = substitute(body, {var: Var(new)})
                    var = new
                taken.add(var)
                prefix.append(var)
                return pull(body)
            raise ValueError("expected a LET-free formula")

        matrix = pull(f)
        return tuple(prefix), _dnf(matrix)

    def formula_to_program(self, f: Formula, vocab: Vocabulary | None = None,
                           variables: Sequence[str] | None = None) -> TranslationResult:
        if vocab is None:
            vocab = infer_vocabulary(f)
        problems = check_formula(f, vocab)
        if problems:
            raise ValidationError(problems)
        positive = sorted(p for p, (_, neg) in vocab.predicates.items() if not neg)
        if positive:
            raise ValidationError([Diagnostic("PositiveSubstratePredicate",
                                              f"substrate predicate {p!r} is positive; the translation needs "
                                              f"every substrate predicate to be negatable") for p in positive])
        if variables is None:
            variables = sorted(free_vars(f))
        nf = self.alias_then(self.normalize(f), variables)
        preds = {c.pred: len(c.head) for c in nf.clauses}
        rules = []
        for c in nf.clauses:
            _, disjuncts = self.prenex_dnf(c.body, avoid=c.head)
            head = Atom(c.pred, tuple(Var(v) for v in c.head))
            for d in disjuncts:
                atoms = tuple(l for l in d if isinstance(l, Atom) and l.pred in preds)
                rest = [l for l in d if not (isinstance(l, Atom) and l.pred in preds)]
                rules.append(Rule(head, atoms, conj(rest) if rest else None))
        full = Vocabulary.make(
            functions=vocab.functions,
            negatable={p: k for p, (k, neg) in vocab.predicates.items() if neg and p != "="},
            superstrate=preds,
        )
        q = nf.body.pred
        return TranslationResult(Program(full, tuple(rules)), q, tuple(variables))


DEFAULT = Translator()

flatten_heads = DEFAULT.flatten_heads
merge_rules = DEFAULT.merge_rules
quantify_bodies = DEFAULT.quantify_bodies
program_to_formula = DEFAULT.program_to_formula
normalize = DEFAULT.normalize
flatten_let = DEFAULT.flatten_let
eliminate_parameters = DEFAULT.eliminate_parameters
alias_then = DEFAULT.alias_then
prenex_dnf = DEFAULT.prenex_dnf
formula_to_program = DEFAULT.formula_to_program


def target_variables(formula: Let) -> tuple[str, ...]:
    """Argument tuple of the body atom of a ``program_to_formula`` result."""
    return tuple(t.name for t in formula.body.args)
