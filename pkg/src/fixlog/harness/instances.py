"""Hand-shaped instances for the LET flattening equations and for parameter sectioning."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from ..evaluator import lfp_clauses
from ..model import Atom, Clause, Formula, Let, Var, Vocabulary, check_formula
from ..structures import Structure
from ..translate import DEFAULT, Translator
from .gen import GenConfig, gen_formula


def _heads(rng, pool, k):
    return tuple(rng.sample(pool, k))


@dataclass(frozen=True)
class NestedInstance:
    """``LET P(x) <- (LET R(y) <- rho THEN pi) THEN (LET S(z) <- sigma THEN theta)``."""

    formula: Let

    @property
    def p_clause(self) -> Clause:
        return self.formula.clauses[0]

    @property
    def r_clause(self) -> Clause:
        return self.p_clause.body.clauses[0]

    @property
    def s_clause(self) -> Clause:
        return self.formula.body.clauses[0]


def gen_nested(v: Vocabulary, cfg: GenConfig, rng: random.Random) -> NestedInstance:
    ar = {p: rng.randint(0, min(cfg.max_arity, 2)) for p in "PRS"}
    x = _heads(rng, ("X", "X1"), ar["P"])
    y = _heads(rng, ("Y", "Y1"), ar["R"])
    z = _heads(rng, ("Z", "Z1"), ar["S"])
    u = _heads(rng, ("U", "U1"), rng.randint(0, 2))
    depth = rng.randint(1, 2)
    pi = gen_formula(v, cfg, rng, free=x, depth=depth, allow_let=False, lets={"P": ar["P"], "R": ar["R"]})
    rho = gen_formula(v, cfg, rng, free=y, depth=depth, allow_let=False, lets={"P": ar["P"], "R": ar["R"]})
    sigma = gen_formula(v, cfg, rng, free=z, depth=depth, allow_let=False, lets={"P": ar["P"], "S": ar["S"]})
    theta = gen_formula(v, cfg, rng, free=u, depth=depth, allow_let=False, lets={"P": ar["P"], "S": ar["S"]})
    f = Let((Clause("P", x, Let((Clause("R", y, rho),), pi)),), Let((Clause("S", z, sigma),), theta))
    assert not check_formula(f, v), check_formula(f, v)
    return NestedInstance(f)


def star_equations(inst: NestedInstance, s: Structure, translator: Translator = DEFAULT) -> dict[str, tuple]:
    """Relations from nested evaluation against the flattened simultaneous recursion.

    Returns ``name -> (nested, flat)`` for P, R and S.
    """
    p_inf = lfp_clauses([inst.p_clause], s)["P"]
    flat = translator.flatten_let(inst.formula)
    star = lfp_clauses(flat.clauses, s)
    names = {c.pred for c in flat.clauses}
    assert names == {"P", "R", "S"}, names
    r_inf = lfp_clauses([inst.r_clause], s, env={"P": star["P"]})["R"]
    s_inf = lfp_clauses([inst.s_clause], s, env={"P": p_inf})["S"]
    return {"P": (p_inf, star["P"]), "R": (r_inf, star["R"]), "S": (s_inf, star["S"])}


@dataclass(frozen=True)
class SectionInstance:
    clauses: tuple[Clause, ...]
    params: tuple[str, ...]


def gen_section(v: Vocabulary, cfg: GenConfig, rng: random.Random, max_params: int = 2) -> SectionInstance:
    params = tuple(sorted(rng.sample(("A", "B"), rng.randint(1, max_params))))
    names = ("P", "R")[:rng.randint(1, 2)]
    ar = {p: rng.randint(1, 2) for p in names}
    heads = {p: _heads(rng, ("U", "V"), ar[p]) for p in names}
    clauses = []
    for p in names:
        body = gen_formula(v, cfg, rng, free=heads[p] + params, depth=rng.randint(1, 3), allow_let=False, lets=ar)
        clauses.append(Clause(p, heads[p], body))
    return SectionInstance(tuple(clauses), params)


def sectioning(inst: SectionInstance, s: Structure, translator: Translator = DEFAULT):
    """First stage where a section of a widened predicate differs from the parameterised iteration.

    Returns None when every stage agrees for every choice of parameter values.
    """
    body = Atom(inst.clauses[0].pred, tuple(Var(x) for x in inst.clauses[0].head))
    new, _ = translator.eliminate_parameters(inst.clauses, body)
    _, wide = lfp_clauses(new, s, trace=True)
    for values in itertools.product(range(s.n), repeat=len(inst.params)):
        val = dict(zip(inst.params, values))
        _, narrow = lfp_clauses(inst.clauses, s, val=val, trace=True)
        steps = max(len(wide), len(narrow))
        for i in range(steps):
            w = wide[min(i, len(wide) - 1)]
            nr = narrow[min(i, len(narrow) - 1)]
            for old, c in zip(inst.clauses, new):
                k = len(old.head)
                order = c.head[k:]
                want = tuple(val[y] for y in order)
                section = {t[:k] for t in w[c.pred] if t[k:] == want}
                if section != set(nr[old.pred]):
                    return {"stage": i, "values": val, "predicate": old.pred,
                            "section": section, "expected": set(nr[old.pred])}
    return None
