"""Seeded random generators for structures, formulas and programs."""
from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Sequence

from ..model import (
    EQ, FALSE, TRUE, And, App, Atom, Clause, Exists, Formula, Let, NegAtom, Or, Program, Rule, Var, Vocabulary,
    check_formula, check_program, conj,
)
from ..structures import Structure, validate_structure


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    universe: tuple[int, int] = (1, 4)
    max_depth: int = 4
    max_clauses: int = 2
    max_arity: int = 2
    max_rules: int = 4
    trials: int = 500

    def problems(self) -> list[str]:
        lo, hi = self.universe
        out = []
        if not 1 <= lo <= hi:
            out.append("universe range must satisfy 1 <= lo <= hi")
        if self.max_depth < 0:
            out.append("max_depth must be >= 0")
        if self.max_clauses < 1:
            out.append("max_clauses must be >= 1")
        if self.max_arity < 0:
            out.append("max_arity must be >= 0")
        if self.max_rules < 0:
            out.append("max_rules must be >= 0")
        if self.trials < 0:
            out.append("trials must be >= 0")
        if not 0 <= self.seed < 2 ** 64:
            out.append("seed must fit in 64 bits")
        return out

    def rng(self, *tags) -> random.Random:
        """An independent stream for ``tags``; same seed and tags give the same stream."""
        return random.Random(":".join(map(str, (self.seed,) + tags)))

    def with_seed(self, seed: int) -> "GenConfig":
        return replace(self, seed=seed)


def default_vocabulary() -> Vocabulary:
    return Vocabulary.make(functions={"c": 0, "f": 1}, negatable={"p": 1, "e": 2, "b": 0})


def _universe(rng: random.Random, cfg: GenConfig) -> int:
    lo, hi = cfg.universe
    sizes = list(range(lo, hi + 1))
    # small universes are favoured
    weights = [3 if k <= 3 else 1 for k in sizes]
    return rng.choices(sizes, weights)[0]


def gen_structure(v: Vocabulary, cfg: GenConfig, rng: random.Random | None = None, n: int | None = None) -> Structure:
    rng = rng or cfg.rng("structure")
    n = n or _universe(rng, cfg)
    funs = {}
    for fn, k in sorted(v.functions.items()):
        size = n ** k
        flat = [rng.randrange(n) for _ in range(size)]
        funs[fn] = _reshape(flat, n, k)
    rels, arities, positive = {}, {}, []
    for p, (k, neg) in sorted(v.predicates.items()):
        if p == EQ or p in v.superstrate:
            continue
        density = rng.choice((0.2, 0.5, 0.8))
        rels[p] = [t for t in _tuples(n, k) if rng.random() < density]
        arities[p] = k
        if not neg:
            positive.append(p)
    s = Structure.make(n, funs, rels, positive, arities)
    assert not validate_structure(s, v)
    return s


def _reshape(flat, n, k):
    if k == 0:
        return flat[0]
    step = n ** (k - 1)
    return [_reshape(flat[i * step:(i + 1) * step], n, k - 1) for i in range(n)]


def _tuples(n, k):
    if k == 0:
        return [()]
    return [t + (a,) for t in _tuples(n, k - 1) for a in range(n)]


# --------------------------------------------------------------------------
# formulas


_LET_NAMES = ("P", "R", "S", "T")
_VAR_POOL = ("U", "V", "W", "X", "Y", "Z")


class _FormulaGen:
    def __init__(self, v: Vocabulary, cfg: GenConfig, rng: random.Random, allow_let=True, let_weight=0.3, keep_positive=()):
        self.v = v
        self.cfg = cfg
        self.rng = rng
        self.allow_let = allow_let
        self.let_weight = let_weight
        self.consts = [f for f, k in v.functions.items() if k == 0]
        self.funs = sorted((f, k) for f, k in v.functions.items() if k > 0)
        self.preds = sorted((p, k, neg and p not in keep_positive) for p, (k, neg) in v.predicates.items()
                            if p not in v.superstrate)

    def term(self, scope: Sequence[str], depth: int = 1):
        rng = self.rng
        options = []
        if scope:
            options.append("var")
        if self.consts:
            options.append("const")
        if self.funs and depth > 0 and (scope or self.consts):
            options.append("fun")
        kind = rng.choice(options) if options else None
        if kind == "var" or (kind is None and scope):
            return Var(rng.choice(list(scope)))
        if kind == "const":
            return App(rng.choice(self.consts), ())
        if kind == "fun":
            fn, k = rng.choice(self.funs)
            return App(fn, tuple(self.term(scope, depth - 1) for _ in range(k)))
        return None

    def literal(self, scope, lets: dict[str, int]) -> Formula:
        rng = self.rng
        cands = [(p, k, neg) for p, k, neg in self.preds]
        cands += [(p, k, False) for p, k in sorted(lets.items())]
        rng.shuffle(cands)
        for p, k, neg in cands:
            args = [self.term(scope) for _ in range(k)]
            if any(a is None for a in args):
                continue
            if neg and rng.random() < 0.3:
                return NegAtom(p, tuple(args))
            return Atom(p, tuple(args))
        return rng.choice((TRUE, FALSE))

    def formula(self, depth: int, scope: Sequence[str], lets: dict[str, int]) -> Formula:
        rng = self.rng
        if depth <= 0:
            if lets and rng.random() < 0.5:
                return self.literal(scope, lets) if rng.random() < 0.2 else self._let_atom(scope, lets)
            return self.literal(scope, lets)
        weights = {"lit": 1.0, "and": 1.5, "or": 1.5, "exists": 1.0}
        if self.allow_let:
            weights["let"] = self.let_weight * 10
        kind = rng.choices(list(weights), list(weights.values()))[0]
        if kind == "lit":
            return self.formula(0, scope, lets)
        if kind in ("and", "or"):
            items = tuple(self.formula(depth - 1, scope, lets) for _ in range(rng.randint(2, 3)))
            return And(items) if kind == "and" else Or(items)
        if kind == "exists":
            var = rng.choice(_VAR_POOL)
            return Exists(var, self.formula(depth - 1, tuple(dict.fromkeys(tuple(scope) + (var,))), lets))
        return self.let(depth, scope, lets)

    def _let_atom(self, scope, lets):
        p = self.rng.choice(sorted(lets))
        args = [self.term(scope) for _ in range(lets[p])]
        if any(a is None for a in args):
            return self.literal(scope, {})
        return Atom(p, tuple(args))

    def let(self, depth: int, scope: Sequence[str], lets: dict[str, int]) -> Formula:
        rng = self.rng
        free = [p for p in _LET_NAMES if p not in lets and p not in self.v.predicates]
        if not free:
            return self.formula(depth - 1, scope, lets)
        k = rng.randint(1, min(self.cfg.max_clauses, len(free)))
        names = rng.sample(free, k)
        arity = {p: rng.randint(0, self.cfg.max_arity) for p in names}
        inner = {**lets, **arity}
        clauses = []
        for p in names:
            head = tuple(rng.sample(_VAR_POOL, arity[p]))
            # outer variables stay visible, so clause bodies may carry parameters
            body_scope = tuple(dict.fromkeys(head + tuple(scope)))
            clauses.append(Clause(p, head, self.formula(depth - 1, body_scope, inner)))
        return Let(tuple(clauses), self.formula(depth - 1, scope, inner))


def gen_formula(v: Vocabulary, cfg: GenConfig, rng: random.Random | None = None, free: Sequence[str] | None = None,
                depth: int | None = None, allow_let: bool = True, lets: dict[str, int] | None = None,
                keep_positive: Sequence[str] = ()) -> Formula:
    """A well-formed EFPL formula whose free variables are among ``free``.

    Predicates in ``keep_positive`` are never negated even when negatable.
    """
    rng = rng or cfg.rng("formula")
    if free is None:
        free = tuple(rng.sample(("X", "Y"), rng.randint(0, 2)))
    depth = cfg.max_depth if depth is None else depth
    g = _FormulaGen(v, cfg, rng, allow_let, keep_positive=keep_positive)
    f = g.formula(depth, tuple(free), dict(lets or {}))
    if lets is None:
        assert not check_formula(f, v), check_formula(f, v)
    return f


def has_nested_let(f: Formula) -> bool:
    from ..model import subformulas
    for g in subformulas(f):
        if isinstance(g, Let):
            inner = [c.body for c in g.clauses] + [g.body]
            if any(isinstance(h, Let) for b in inner for h in subformulas(b)):
                return True
    return False


# --------------------------------------------------------------------------
# programs


_SUPER_NAMES = ("q", "r", "t")


def gen_program(v: Vocabulary, cfg: GenConfig, rng: random.Random | None = None) -> Program:
    rng = rng or cfg.rng("program")
    names = [p for p in _SUPER_NAMES if p not in v.names()]
    sup = {p: rng.randint(0, cfg.max_arity) for p in rng.sample(names, rng.randint(1, len(names)))}
    vocab = Vocabulary.make(
        functions=v.functions,
        negatable={p: k for p, (k, neg) in v.predicates.items() if neg and p != EQ},
        positive={p: k for p, (k, neg) in v.predicates.items() if not neg},
        superstrate=sup,
    )
    g = _FormulaGen(vocab, cfg, rng, allow_let=False)
    heads = sorted(sup)
    rules = []
    for _ in range(rng.randint(0, cfg.max_rules)):
        scope = tuple(rng.sample(("X", "Y", "Z"), rng.randint(1, 3)))
        h = rng.choice(heads)
        head = Atom(h, tuple(g.term(scope) for _ in range(sup[h])))
        atoms = []
        for _ in range(rng.choice((0, 1, 1, 2))):
            q = rng.choice(heads)
            atoms.append(Atom(q, tuple(g.term(scope) for _ in range(sup[q]))))
        constraint = _gen_constraint(g, scope, rng.randint(0, 2)) if rng.random() < 0.8 else None
        rules.append(Rule(head, tuple(atoms), constraint))
    p = Program(vocab, tuple(rules))
    assert not check_program(p), check_program(p)
    return p


def _gen_constraint(g: _FormulaGen, scope, depth) -> Formula:
    rng = g.rng
    if depth == 0:
        return g.literal(scope, {})
    items = tuple(_gen_constraint(g, scope, depth - 1) for _ in range(rng.randint(1, 3)))
    if len(items) == 1:
        return items[0]
    return Or(items) if rng.random() < 0.4 else conj(items)
