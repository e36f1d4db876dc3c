"""Finite structures over the universe ``0..n-1`` and homomorphisms between them."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .model import EQ, App, Diagnostic, FixlogError, Term, Var, Vocabulary

Tuple = tuple[int, ...]


class UnboundVariable(FixlogError):
    pass


def _freeze_table(table) -> np.ndarray:
    arr = np.array(table, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Structure:
    """A finite structure.

    ``functions`` maps a name to an integer ndarray of shape ``(n,)*arity``;
    ``relations`` maps a name to ``(arity, sorted tuple of tuples)``.
    Relations named in ``positive`` are non-negatable.  Equality is never
    stored.
    """

    n: int
    functions: Mapping[str, np.ndarray] = field(default_factory=dict)
    relations: Mapping[str, tuple[int, tuple[Tuple, ...]]] = field(default_factory=dict)
    positive: frozenset[str] = frozenset()

    @classmethod
    def make(cls, n: int, functions=None, relations=None, positive=(), arities=None) -> "Structure":
        """Build a structure; relation arities are inferred from tuples unless given."""
        arities = dict(arities or {})
        funs = {name: _freeze_table(t) for name, t in dict(functions or {}).items()}
        rels = {}
        for name, tuples in dict(relations or {}).items():
            tuples = sorted({tuple(int(x) for x in t) for t in tuples})
            if name in arities:
                k = arities[name]
            elif tuples:
                k = len(tuples[0])
            else:
                raise ValueError(f"arity of empty relation {name!r} must be given")
            rels[name] = (k, tuple(tuples))
        return cls(n, funs, rels, frozenset(positive))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Structure):
            return NotImplemented
        return (self.n == other.n and self.relations == other.relations and self.positive == other.positive
                and self.functions.keys() == other.functions.keys()
                and all(np.array_equal(self.functions[k], other.functions[k]) for k in self.functions))

    def __hash__(self) -> int:
        return hash((self.n, tuple(sorted(self.relations.items()))))

    def vocabulary(self) -> Vocabulary:
        return Vocabulary.make(
            functions={k: v.ndim for k, v in self.functions.items()},
            negatable={k: a for k, (a, _) in self.relations.items() if k not in self.positive},
            positive={k: a for k, (a, _) in self.relations.items() if k in self.positive},
        )

    def holds(self, pred: str, tup: Tuple) -> bool:
        if pred == EQ:
            return tup[0] == tup[1]
        return tuple(tup) in self._tuple_sets[pred]

    @cached_property
    def _tuple_sets(self) -> dict[str, frozenset[Tuple]]:
        return {k: frozenset(ts) for k, (_, ts) in self.relations.items()}

    @cached_property
    def dense(self) -> dict[str, np.ndarray]:
        """Boolean characteristic arrays for every relation, ``=`` included."""
        out = {EQ: np.eye(self.n, dtype=bool)}
        for name, (k, tuples) in self.relations.items():
            arr = np.zeros((self.n,) * k, dtype=bool)
            for t in tuples:
                arr[t] = True
            arr.setflags(write=False)
            out[name] = arr
        return out

    def apply(self, fn: str, args: Tuple) -> int:
        return int(self.functions[fn][tuple(args)])


def validate_structure(s: Structure, vocab: Vocabulary | None = None) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    if s.n < 1:
        return [Diagnostic("EmptyUniverse", "universe must have at least one element")]
    if vocab is not None:
        for fn, k in vocab.functions.items():
            if fn not in s.functions:
                out.append(Diagnostic("MissingFunctionTable", f"no table for function {fn!r}"))
            elif s.functions[fn].ndim != k:
                out.append(Diagnostic("TupleArityMismatch",
                                      f"table for {fn!r} has arity {s.functions[fn].ndim}, expected {k}"))
        for p, (k, _) in vocab.predicates.items():
            if p == EQ or p in vocab.superstrate:
                continue
            if p not in s.relations:
                out.append(Diagnostic("MissingRelation", f"no tuples given for relation {p!r}"))
            elif s.relations[p][0] != k:
                out.append(Diagnostic("TupleArityMismatch",
                                      f"relation {p!r} has arity {s.relations[p][0]}, expected {k}"))
    for fn, table in s.functions.items():
        if table.shape != (s.n,) * table.ndim:
            out.append(Diagnostic("MissingFunctionTable", f"table for {fn!r} is incomplete"))
        elif table.size and (table.min() < 0 or table.max() >= s.n):
            out.append(Diagnostic("TableEntryOutOfRange", f"table for {fn!r} has an entry outside 0..{s.n - 1}"))
    for name, (k, tuples) in s.relations.items():
        if name == EQ:
            out.append(Diagnostic("EqualityStored", "'=' is built in and cannot be given tuples"))
        for t in tuples:
            if len(t) != k:
                out.append(Diagnostic("TupleArityMismatch", f"tuple {t} of {name!r} does not have arity {k}"))
            elif any(x < 0 or x >= s.n for x in t):
                out.append(Diagnostic("TableEntryOutOfRange",
                                      f"tuple {t} of {name!r} has an entry outside 0..{s.n - 1}"))
    return out


def eval_term(t: Term, s: Structure, val: Mapping[str, int]) -> int:
    if isinstance(t, Var):
        try:
            return val[t.name]
        except KeyError:
            raise UnboundVariable(t.name) from None
    return s.apply(t.fn, tuple(eval_term(a, s, val) for a in t.args))


# --------------------------------------------------------------------------
# common structures


def succ(n: int, relations=None, arities=None, positive=()) -> Structure:
    """``0..n-1`` with constant ``0`` and clamped successor ``s``."""
    return Structure.make(n, {"0": 0, "s": [min(i + 1, n - 1) for i in range(n)]},
                          relations or {}, positive, arities)


def clamp_arith(n: int) -> Structure:
    """``0..n-1`` with constants ``0``, ``1``, clamped ``plus``/``times`` and ``lt``."""
    idx = np.arange(n)
    plus = np.minimum(idx[:, None] + idx[None, :], n - 1)
    times = np.minimum(idx[:, None] * idx[None, :], n - 1)
    lt = [(a, b) for a in range(n) for b in range(a + 1, n)]
    return Structure.make(n, {"0": 0, "1": 1 % n, "plus": plus, "times": times}, {"lt": lt}, arities={"lt": 2})


# --------------------------------------------------------------------------
# homomorphisms


@dataclass(frozen=True)
class Homomorphism:
    source: Structure
    target: Structure
    mapping: tuple[int, ...]

    def __call__(self, a: int) -> int:
        return self.mapping[a]

    def image(self, tup: Iterable[int]) -> Tuple:
        return tuple(self.mapping[a] for a in tup)


def check_homomorphism(h: Homomorphism, *, strong: bool = True, distinct: bool = True) -> list[Diagnostic]:
    """Check h against its structures.

    With ``strong`` the complement of every negatable relation is preserved
    too.  ``distinct`` treats ``=`` as such a relation, which amounts to
    requiring h to be injective.
    """
    src, tgt = h.source, h.target
    out: list[Diagnostic] = []
    if len(h.mapping) != src.n or any(not 0 <= b < tgt.n for b in h.mapping):
        return [Diagnostic("BadMapping", "mapping must send 0..n_src-1 into 0..n_tgt-1")]
    for fn, table in src.functions.items():
        if fn not in tgt.functions or tgt.functions[fn].ndim != table.ndim:
            out.append(Diagnostic("FunctionNotPreserved", f"target lacks function {fn!r}"))
            continue
        for args in itertools.product(range(src.n), repeat=table.ndim):
            if h(int(table[args])) != tgt.apply(fn, h.image(args)):
                out.append(Diagnostic("FunctionNotPreserved", f"{fn}{args} is not preserved"))
                break
    tgt_rels = tgt._tuple_sets
    for name, (k, tuples) in src.relations.items():
        if name not in tgt.relations:
            out.append(Diagnostic("RelationNotPreserved", f"target lacks relation {name!r}"))
            continue
        if any(h.image(t) not in tgt_rels[name] for t in tuples):
            out.append(Diagnostic("RelationNotPreserved", f"a tuple of {name!r} is not preserved"))
        if strong and name not in src.positive:
            inside = src._tuple_sets[name]
            for t in itertools.product(range(src.n), repeat=k):
                if t not in inside and h.image(t) in tgt_rels[name]:
                    out.append(Diagnostic("NegatableComplementNotPreserved",
                                          f"{name}{t} is false but its image is true"))
                    break
    if strong and distinct and len(set(h.mapping)) != len(h.mapping):
        out.append(Diagnostic("NegatableComplementNotPreserved", "distinct elements are identified by the map"))
    return out
