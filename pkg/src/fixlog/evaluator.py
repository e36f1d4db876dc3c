"""Least-fixed-point evaluation of formulas and programs over finite structures.

Relations are held as dense boolean arrays.  A subformula evaluates to a
:class:`Table`: a boolean array with one axis per variable that is still
open.  Every fixed point is computed by naive iteration from the empty
interpretation; each stage recomputes all clause bodies in full.

Variables left open inside a LET body become extra axes of the LET-bound
relations, so a recursion is solved once for all values of its outer
variables instead of once per value.
"""
from __future__ import annotations

import itertools
import string
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import (
    EQ, And, App, Atom, Clause, Exists, FixlogError, Formula, Let, NegAtom, Or, Program, Rule, Term, Var,
    exists_many, free_vars, term_vars,
)
from .structures import Structure, UnboundVariable

Tuple = tuple[int, ...]
Interpretation = dict[str, frozenset[Tuple]]


class IllFormed(FixlogError):
    pass


class ClosureBoundExceeded(FixlogError):
    """An iteration ran longer than the size of its tuple space allows."""


class TupleSpaceTooLarge(FixlogError):
    pass


# number of fixed-point iterations that finished within the closure bound
BOUND_CHECKS = {"let": 0, "program": 0}


class Axis:
    """An open variable position.  Compared by identity."""

    __slots__ = ("size",)

    def __init__(self, size: int):
        self.size = size

    def __repr__(self) -> str:
        return f"Axis#{id(self) % 10000}"


@dataclass
class Table:
    axes: tuple[Axis, ...]
    arr: np.ndarray


@dataclass
class Rel:
    """A relation of arity ``k`` whose array may carry trailing ``extra`` axes."""

    arr: np.ndarray
    k: int
    extra: tuple[Axis, ...] = ()


def _place(t: Table, axes: Sequence[Axis]) -> np.ndarray:
    """View of t's array broadcastable against the axis order ``axes``."""
    if t.axes == tuple(axes):
        return t.arr
    order = [t.axes.index(a) for a in axes if a in t.axes]
    arr = t.arr.transpose(order) if order != list(range(len(order))) else t.arr
    shape = [a.size if a in t.axes else 1 for a in axes]
    return arr.reshape(shape)


def _union(tables: Iterable[Table]) -> tuple[Axis, ...]:
    seen: dict[Axis, None] = {}
    for t in tables:
        seen.update(dict.fromkeys(t.axes))
    return tuple(seen)


def _full(t: Table, axes: Sequence[Axis]) -> np.ndarray:
    return np.broadcast_to(_place(t, axes), tuple(a.size for a in axes))


def _dedup(axes: tuple[Axis, ...], arr: np.ndarray) -> Table:
    axes = list(axes)
    while len(set(axes)) != len(axes):
        for i, a in enumerate(axes):
            j = axes.index(a, i + 1) if axes.count(a) > 1 else -1
            if j >= 0:
                arr = np.diagonal(arr, axis1=i, axis2=j)
                axes = [b for k, b in enumerate(axes) if k not in (i, j)] + [a]
                break
    return Table(tuple(axes), arr)


def _combine(tables: list[Table], op) -> Table:
    axes = _union(tables)
    arr = reduce(op, (_place(t, axes) for t in tables))
    return Table(axes, np.broadcast_to(arr, tuple(a.size for a in axes)))


class _Evaluator:
    def __init__(self, s: Structure):
        self.s = s
        self.n = s.n
        self.base = {name: Rel(arr, arr.ndim) for name, arr in s.dense.items()}
        self.stage_counts: list[int] = []

    # -- terms
    def term(self, t: Term, ctx: Mapping) -> Table:
        if isinstance(t, Var):
            try:
                v = ctx[t.name]
            except KeyError:
                raise UnboundVariable(t.name) from None
            if isinstance(v, Axis):
                return Table((v,), np.arange(v.size))
            return Table((), np.asarray(v))
        try:
            table = self.s.functions[t.fn]
        except KeyError:
            raise IllFormed(f"no table for function {t.fn!r}") from None
        if table.ndim != len(t.args):
            raise IllFormed(f"{t.fn!r} applied to {len(t.args)} arguments")
        if not t.args:
            return Table((), table)
        args = [self.term(a, ctx) for a in t.args]
        axes = _union(args)
        return Table(axes, np.broadcast_to(table[tuple(_place(a, axes) for a in args)],
                                           tuple(a.size for a in axes)))

    def lookup(self, rel: Rel, args: Sequence[Term], ctx: Mapping) -> Table:
        if len(args) != rel.k:
            raise IllFormed(f"arity mismatch: {len(args)} arguments for a {rel.k}-ary relation")
        terms = [self.term(a, ctx) for a in args]
        axes = _union(terms)
        arr = rel.arr[tuple(_place(t, axes) for t in terms)] if terms else rel.arr
        front = tuple(a.size for a in axes)
        arr = np.broadcast_to(arr, front + arr.shape[arr.ndim - len(rel.extra):] if rel.extra else front)
        return _dedup(axes + rel.extra, arr)

    # -- formulas
    def formula(self, f: Formula, ctx: Mapping, env: Mapping[str, Rel]) -> Table:
        if isinstance(f, (Atom, NegAtom)):
            if f.pred == EQ:
                if len(f.args) != 2:
                    raise IllFormed("'=' is binary")
                a, b = (self.term(t, ctx) for t in f.args)
                axes = _union([a, b])
                arr = np.equal(_place(a, axes), _place(b, axes))
                t = Table(axes, np.broadcast_to(arr, tuple(x.size for x in axes)))
            else:
                rel = env.get(f.pred) or self.base.get(f.pred)
                if rel is None:
                    raise IllFormed(f"predicate {f.pred!r} is not interpreted")
                t = self.lookup(rel, f.args, ctx)
            return Table(t.axes, ~t.arr) if isinstance(f, NegAtom) else t
        if isinstance(f, And):
            if not f.items:
                return Table((), np.bool_(True))
            return _combine([self.formula(g, ctx, env) for g in f.items], np.logical_and)
        if isinstance(f, Or):
            if not f.items:
                return Table((), np.bool_(False))
            return _combine([self.formula(g, ctx, env) for g in f.items], np.logical_or)
        if isinstance(f, Exists):
            return self.exists(f, ctx, env)
        if isinstance(f, Let):
            fixed = self.lfp(f.clauses, ctx, env)
            return self.formula(f.body, ctx, {**env, **fixed})
        raise TypeError(f"not a formula: {f!r}")

    def exists(self, f: Exists, ctx: Mapping, env: Mapping[str, Rel]) -> Table:
        names = []
        body: Formula = f
        while isinstance(body, Exists):
            names.append(body.var)
            body = body.body
        inner = dict(ctx)
        bound = []
        for v in names:
            a = Axis(self.n)
            inner[v] = a
            bound.append(a)
        bound_set = set(bound)
        conjuncts = _flatten_and(body)
        tables = [self.formula(g, inner, env) for g in conjuncts]
        touching = [t for t in tables if bound_set & set(t.axes)]
        rest = [t for t in tables if not bound_set & set(t.axes)]
        if touching:
            rest.append(_contract(touching, bound_set))
        if not rest:
            return Table((), np.bool_(True))
        return _combine(rest, np.logical_and) if len(rest) > 1 else rest[0]

    # -- fixed points
    def lfp(self, clauses: Sequence[Clause], ctx: Mapping, env: Mapping[str, Rel],
            record: list | None = None) -> dict[str, Rel]:
        heads = {c.pred: tuple(Axis(self.n) for _ in c.head) for c in clauses}
        cur = {c.pred: Rel(np.zeros((self.n,) * len(c.head), dtype=bool), len(c.head)) for c in clauses}
        if record is not None:
            record.append(cur)
        stage = 0
        while True:
            scope = {**env, **cur}
            new = {}
            for c in clauses:
                hax = heads[c.pred]
                t = self.formula(c.body, {**ctx, **dict(zip(c.head, hax))}, scope)
                extra = tuple(a for a in t.axes if a not in hax)
                axes = hax + extra
                new[c.pred] = Rel(_full(t, axes), len(hax), extra)
            stage += 1
            if record is not None:
                record.append(new)
            if all(_same(cur[p], new[p], heads[p]) for p in cur):
                self.stage_counts.append(stage)
                BOUND_CHECKS["let"] += 1
                return new
            # parameter values iterate side by side, so head arity alone bounds the stages
            bound = 1 + sum(self.n ** len(h) for h in heads.values())
            if stage > bound:
                raise ClosureBoundExceeded(f"{stage} stages exceed the bound {bound}")
            cur = new


def _flatten_and(f: Formula) -> list[Formula]:
    if isinstance(f, And) and f.items:
        return [g for h in f.items for g in _flatten_and(h)]
    return [f]


_LETTERS = string.ascii_letters


def _contract(tables: list[Table], bound: set[Axis]) -> Table:
    """Existentially project ``bound`` axes out of the conjunction of ``tables``."""
    axes = _union(tables)
    out = tuple(a for a in axes if a not in bound)
    if len(tables) == 1:
        t = tables[0]
        red = tuple(i for i, a in enumerate(t.axes) if a in bound)
        return Table(tuple(a for a in t.axes if a not in bound), t.arr.any(axis=red))
    if len(axes) > len(_LETTERS):
        joined = _combine(tables, np.logical_and)
        return _contract([joined], bound)
    letter = {a: _LETTERS[i] for i, a in enumerate(axes)}
    spec = ",".join("".join(letter[a] for a in t.axes) for t in tables) + "->" + "".join(letter[a] for a in out)
    res = np.einsum(spec, *(t.arr.astype(np.float64) for t in tables), optimize="greedy")
    return Table(out, np.asarray(res) > 0.5)


def _same(a: Rel, b: Rel, hax: tuple[Axis, ...]) -> bool:
    ta = Table(hax + a.extra, a.arr)
    tb = Table(hax + b.extra, b.arr)
    axes = _union([ta, tb])
    return bool(np.array_equal(_full(ta, axes), _full(tb, axes)))


def _tuples(arr: np.ndarray) -> frozenset[Tuple]:
    if arr.ndim == 0:
        return frozenset({()}) if bool(arr) else frozenset()
    return frozenset(tuple(int(x) for x in row) for row in np.argwhere(arr))


def _dense(tuples: Iterable[Tuple], k: int, n: int) -> np.ndarray:
    arr = np.zeros((n,) * k, dtype=bool)
    for t in tuples:
        arr[tuple(t)] = True
    return arr


def _arities_in(f: Formula) -> dict[str, int]:
    from .model import subformulas
    out: dict[str, int] = {}
    for g in subformulas(f):
        if isinstance(g, (Atom, NegAtom)):
            out.setdefault(g.pred, len(g.args))
    return out


def _env_rels(env: Mapping[str, Iterable[Tuple]] | None, n: int, arities: Mapping[str, int]) -> dict[str, Rel]:
    out = {}
    for name, tuples in (env or {}).items():
        tuples = list(tuples)
        k = len(tuples[0]) if tuples else arities.get(name, 0)
        out[name] = Rel(_dense(tuples, k, n), k)
    return out


def _ctx(val: Mapping[str, int] | None, s: Structure) -> dict:
    ctx = dict(val or {})
    for k, v in ctx.items():
        if not 0 <= v < s.n:
            raise ValueError(f"value {v} of {k} is outside the universe")
    return ctx


# --------------------------------------------------------------------------
# formulas


def eval_formula(f: Formula, s: Structure, val: Mapping[str, int] | None = None,
                 env: Mapping[str, Iterable[Tuple]] | None = None) -> bool:
    """Truth of f in s under the valuation ``val``."""
    ctx = _ctx(val, s)
    missing = free_vars(f) - set(ctx)
    if missing:
        raise UnboundVariable(", ".join(sorted(missing)))
    ev = _Evaluator(s)
    t = ev.formula(f, ctx, _env_rels(env, s.n, _arities_in(f)))
    return bool(t.arr.all()) if t.axes else bool(t.arr)


def satisfying_tuples(f: Formula, s: Structure, variables: Sequence[str],
                      val: Mapping[str, int] | None = None,
                      env: Mapping[str, Iterable[Tuple]] | None = None) -> list[Tuple]:
    """Sorted tuples over ``variables`` that satisfy f."""
    ctx = _ctx(val, s)
    axes = tuple(Axis(s.n) for _ in variables)
    ctx.update(zip(variables, axes))
    missing = free_vars(f) - set(ctx)
    if missing:
        raise UnboundVariable(", ".join(sorted(missing)))
    t = _Evaluator(s).formula(f, ctx, _env_rels(env, s.n, _arities_in(f)))
    return sorted(_tuples(_full(t, axes)))


def lfp_clauses(clauses: Sequence[Clause], s: Structure, val: Mapping[str, int] | None = None,
                env: Mapping[str, Iterable[Tuple]] | None = None, trace: bool = False):
    """Simultaneous least fixed point of the clauses.

    Free variables of clause bodies other than the heads are read from
    ``val``.  With ``trace`` the list of stages, starting from the empty
    interpretation, is returned as well.
    """
    ctx = _ctx(val, s)
    for c in clauses:
        missing = free_vars(c.body) - set(c.head) - set(ctx)
        if missing:
            raise UnboundVariable(", ".join(sorted(missing)))
    arities: dict[str, int] = {}
    for c in clauses:
        arities.update(_arities_in(c.body))
    record: list | None = [] if trace else None
    fixed = _Evaluator(s).lfp(tuple(clauses), ctx, _env_rels(env, s.n, arities), record)
    result = {p: _tuples(r.arr) for p, r in fixed.items()}
    if not trace:
        return result
    stages = [{p: _tuples(r.arr) for p, r in st.items()} for st in record]
    # the last recorded stage repeats the fixed point
    return result, stages[:-1]


# --------------------------------------------------------------------------
# programs


@dataclass
class _CompiledRule:
    pred: str
    head: tuple[Term, ...]
    head_vars: tuple[str, ...]
    body: Formula


def _compile(p: Program) -> list[_CompiledRule]:
    out = []
    for r in p.rules:
        hv = tuple(dict.fromkeys(v for t in r.head.args for v in term_vars(t)))
        body = r.body()
        inner = [v for v in dict.fromkeys(_rule_body_vars(r)) if v not in hv]
        out.append(_CompiledRule(r.head.pred, r.head.args, hv, exists_many(inner, body)))
    return out


def _rule_body_vars(r: Rule):
    from .model import all_vars
    for f in r.body_items():
        yield from all_vars(f)


class IterationTrace(Sequence):
    """Stages ``S_0 = bottom, S_1, ..., S_m`` of a program iteration."""

    def __init__(self, arrays: list[dict[str, np.ndarray]]):
        self._arrays = arrays

    def __len__(self) -> int:
        return len(self._arrays)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return {p: _tuples(a) for p, a in self._arrays[i].items()}

    def sizes(self) -> list[dict[str, int]]:
        return [{p: int(a.sum()) for p, a in st.items()} for st in self._arrays]


class _ProgramRunner:
    def __init__(self, p: Program, s: Structure):
        self.p = p
        self.s = s
        self.ev = _Evaluator(s)
        self.rules = _compile(p)
        self.arities = p.vocab.superstrate_arities()

    def bottom(self, extra: tuple[Axis, ...] = ()) -> dict[str, np.ndarray]:
        n = self.s.n
        return {q: np.zeros((n,) * k + tuple(a.size for a in extra), dtype=bool) for q, k in self.arities.items()}

    def delta(self, cur: Mapping[str, np.ndarray], extra: tuple[Axis, ...] = ()) -> dict[str, np.ndarray]:
        env = {q: Rel(arr, self.arities[q], extra) for q, arr in cur.items()}
        out = self.bottom(extra)
        for r in self.rules:
            out[r.pred] |= self._derive(r, env, extra)
        return out

    def _derive(self, r: _CompiledRule, env: Mapping[str, Rel], extra: tuple[Axis, ...]) -> np.ndarray:
        n = self.s.n
        k = len(r.head)
        hax = tuple(Axis(n) for _ in r.head_vars)
        ctx = dict(zip(r.head_vars, hax))
        t = self.ev.formula(r.body, ctx, env)
        axes = hax + extra
        mask = _full(t, axes)
        esize = tuple(a.size for a in extra)
        if all(isinstance(a, Var) for a in r.head) and len(set(map(str, r.head))) == k == len(hax):
            order = [r.head_vars.index(a.name) for a in r.head] + list(range(k, k + len(extra)))
            return mask.transpose(order)
        evals = [_place(self.ev.term(a, ctx), hax) for a in r.head]
        hshape = (n,) * len(hax)
        rows = mask.reshape((-1, int(np.prod(esize, dtype=np.int64))))
        if k:
            idx = [np.broadcast_to(e, hshape).ravel() for e in evals]
            flat = np.ravel_multi_index(idx, (n,) * k)
        else:
            flat = np.zeros(rows.shape[0], dtype=np.int64)
        out = np.zeros((n ** k, rows.shape[1]), dtype=bool)
        np.logical_or.at(out, flat, rows)
        return out.reshape((n,) * k + esize)

    def gamma(self, cur: Mapping[str, np.ndarray], extra: tuple[Axis, ...] = ()) -> dict[str, np.ndarray]:
        d = self.delta(cur, extra)
        return {q: d[q] | cur[q] for q in d}

    def run(self, step) -> list[dict[str, np.ndarray]]:
        cur = self.bottom()
        stages = [cur]
        bound = 1 + sum(self.s.n ** k for k in self.arities.values())
        while True:
            new = step(cur)
            if all(np.array_equal(new[q], cur[q]) for q in cur):
                BOUND_CHECKS["program"] += 1
                return stages
            stages.append(new)
            if len(stages) > bound:
                raise ClosureBoundExceeded(f"trace of length {len(stages)} exceeds the bound {bound}")
            cur = new


def closure_bound(p: Program, s: Structure) -> int:
    return 1 + sum(s.n ** k for k in p.vocab.superstrate_arities().values())


def _interp(arrays: Mapping[str, np.ndarray]) -> Interpretation:
    return {q: _tuples(a) for q, a in arrays.items()}


def _arrays(p: Program, s: Structure, i: Mapping[str, Iterable[Tuple]] | None) -> dict[str, np.ndarray]:
    out = {}
    for q, k in p.vocab.superstrate_arities().items():
        out[q] = _dense((i or {}).get(q, ()), k, s.n)
    return out


def gamma_step(p: Program, s: Structure, i: Mapping[str, Iterable[Tuple]] | None = None) -> Interpretation:
    """One inflationary step: everything derivable from i in one rule application, plus i."""
    run = _ProgramRunner(p, s)
    return _interp(run.gamma(_arrays(p, s, i)))


def delta_step(p: Program, s: Structure, i: Mapping[str, Iterable[Tuple]] | None = None) -> Interpretation:
    """The non-inflationary step: only what the rules derive from i."""
    run = _ProgramRunner(p, s)
    return _interp(run.delta(_arrays(p, s, i)))


def eval_program(p: Program, s: Structure) -> tuple[Interpretation, IterationTrace]:
    """Least fixed point of the inflationary operator, and the stages leading to it."""
    run = _ProgramRunner(p, s)
    stages = run.run(run.gamma)
    return _interp(stages[-1]), IterationTrace(stages)


def eval_plain_delta(p: Program, s: Structure, trace: bool = False):
    """Least fixed point reached by iterating the non-inflationary operator."""
    run = _ProgramRunner(p, s)
    stages = run.run(run.delta)
    if trace:
        return _interp(stages[-1]), IterationTrace(stages)
    return _interp(stages[-1])


ORACLE_LIMIT = 16


def least_closed_point_oracle(p: Program, s: Structure, batch: int = 4096) -> Interpretation:
    """The least A with gamma(A) <= A, by exhaustive enumeration of all interpretations."""
    arities = p.vocab.superstrate_arities()
    slots = [(q, t) for q, k in arities.items() for t in itertools.product(range(s.n), repeat=k)]
    if len(slots) > ORACLE_LIMIT:
        raise TupleSpaceTooLarge(f"{len(slots)} candidate tuples exceed the limit {ORACLE_LIMIT}")
    run = _ProgramRunner(p, s)
    total = 1 << len(slots)
    least = np.ones(len(slots), dtype=bool)
    found = False
    for lo in range(0, total, batch):
        codes = np.arange(lo, min(total, lo + batch), dtype=np.int64)
        bits = ((codes[None, :] >> np.arange(len(slots))[:, None]) & 1).astype(bool)
        axis = Axis(len(codes))
        cands = run.bottom((axis,))
        for j, (q, t) in enumerate(slots):
            cands[q][t] = bits[j]
        g = run.gamma(cands, (axis,))
        closed = np.ones(len(codes), dtype=bool)
        for q in arities:
            closed &= ~(g[q] & ~cands[q]).reshape(-1, len(codes)).any(axis=0)
        if closed.any():
            found = True
            least &= bits[:, closed].all(axis=1)
    assert found, "the full interpretation is always closed"
    out: dict[str, set] = {q: set() for q in arities}
    for j, (q, t) in enumerate(slots):
        if least[j]:
            out[q].add(t)
    return {q: frozenset(v) for q, v in out.items()}
