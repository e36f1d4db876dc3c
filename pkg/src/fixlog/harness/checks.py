"""Differential checks of the translations and of homomorphism preservation."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

from ..evaluator import eval_formula, eval_program, satisfying_tuples
from ..model import (
    EQ, And, Atom, Clause, Exists, Formula, Let, NegAtom, Or, Program, TRUE, FALSE, Vocabulary, check_formula,
    check_program, free_vars, subformulas,
)
from ..structures import Homomorphism, Structure, check_homomorphism
from ..translate import DEFAULT, Translator
from .gen import GenConfig, default_vocabulary, gen_formula, gen_program, gen_structure


@dataclass
class Discrepancy:
    """A disagreement between two sides of a check, with what is needed to replay it."""

    kind: str
    artifact: Any
    structure: Structure
    tuple: tuple | None
    expected: bool
    actual: bool
    seed: int = 0
    target: str | None = None
    variables: tuple[str, ...] = ()
    vocab: Vocabulary | None = None
    extra: dict = field(default_factory=dict)
    shrunk: "Discrepancy | None" = None

    def minimal(self) -> "Discrepancy":
        return self.shrunk or self

    def replay(self, translator: Translator = DEFAULT) -> bool:
        """True if the disagreement still shows up."""
        if self.kind == "program":
            return _program_diff(self.artifact, self.target, self.structure, translator) is not None
        if self.kind == "formula":
            return _formula_diff(self.artifact, self.variables, self.vocab, self.structure, translator) is not None
        if self.kind == "homomorphism":
            h = self.extra["h"]
            val = dict(zip(self.variables, self.tuple))
            return eval_formula(self.artifact, h.source, val) and not eval_formula(
                self.artifact, h.target, {k: h(a) for k, a in val.items()})
        raise ValueError(self.kind)

    def to_text(self) -> str:
        from ..syntax import print_formula, print_formula_file, print_program, print_structure
        d = self.minimal()
        lines = [f"# {d.kind} discrepancy, seed {d.seed}"]
        if d.kind == "program":
            lines.append(f"# target {d.target}")
            lines.append(print_program(d.artifact))
        elif d.vocab is not None:
            lines.append(print_formula_file(d.artifact, d.vocab))
        else:
            lines.append(print_formula(d.artifact))
        lines.append(f"# tuple {d.tuple} over {d.variables}: expected {d.expected}, got {d.actual}")
        lines.append(print_structure(d.structure))
        return "\n".join(lines)


# --------------------------------------------------------------------------
# program -> formula


def _program_diff(p: Program, target, s: Structure, translator: Translator):
    interp, _ = eval_program(p, s)
    targets = [target] if target else sorted(p.vocab.superstrate)
    for r in targets:
        f = translator.program_to_formula(p, r)
        variables = tuple(t.name for t in f.body.args)
        got = set(satisfying_tuples(f, s, variables))
        want = set(interp[r])
        if got != want:
            t = min(got ^ want)
            return r, t, t in want, t in got, variables
    return None


def _shrink_structure(s: Structure, still_bad: Callable[[Structure], bool]) -> Structure:
    changed = True
    while changed and s.n > 1:
        changed = False
        for drop in range(s.n):
            smaller = restrict(s, [a for a in range(s.n) if a != drop])
            if smaller is not None and still_bad(smaller):
                s = smaller
                changed = True
                break
    return s


def restrict(s: Structure, keep: Sequence[int]) -> Structure | None:
    """The substructure on ``keep``, renumbered, or None if ``keep`` is not closed under the functions."""
    index = {a: i for i, a in enumerate(keep)}
    funs = {}
    for fn, table in s.functions.items():
        k = table.ndim
        out = {}
        for args in itertools.product(keep, repeat=k):
            b = int(table[args])
            if b not in index:
                return None
            out[tuple(index[a] for a in args)] = index[b]
        funs[fn] = _nested(out, len(keep), k)
    rels = {name: [tuple(index[a] for a in t) for t in ts if all(a in index for a in t)]
            for name, (k, ts) in s.relations.items()}
    arities = {name: k for name, (k, _) in s.relations.items()}
    return Structure.make(len(keep), funs, rels, s.positive, arities)


def _nested(table, n, k, prefix=()):
    if k == 0:
        return table[prefix]
    return [_nested(table, n, k - 1, prefix + (i,)) for i in range(n)]


def shrink_program(p: Program, target, s: Structure, translator: Translator) -> tuple[Program, Structure]:
    def bad(q, t):
        try:
            return _program_diff(q, target, t, translator) is not None
        except Exception:
            return False

    changed = True
    while changed:
        changed = False
        for i in range(len(p.rules)):
            q = Program(p.vocab, p.rules[:i] + p.rules[i + 1:])
            if bad(q, s):
                p = q
                changed = True
                break
    s = _shrink_structure(s, lambda t: bad(p, t))
    return p, s


def check_equivalence_program(p: Program, target: str | None, cfg: GenConfig, translator: Translator = DEFAULT,
                              structures: int = 5, rng: random.Random | None = None) -> Discrepancy | None:
    """Compare eval_program with the formula produced by program_to_formula on random structures."""
    rng = rng or cfg.rng("check-program")
    sub = p.vocab.substrate()
    for _ in range(structures):
        s = gen_structure(sub, cfg, rng)
        diff = _program_diff(p, target, s, translator)
        if diff is None:
            continue
        r, t, want, got, variables = diff
        d = Discrepancy("program", p, s, t, want, got, cfg.seed, r, variables)
        q, small = shrink_program(p, r, s, translator)
        r2, t2, want2, got2, variables2 = _program_diff(q, r, small, translator)
        d.shrunk = Discrepancy("program", q, small, t2, want2, got2, cfg.seed, r2, variables2)
        return d
    return None


# --------------------------------------------------------------------------
# formula -> program


def _formula_diff(f: Formula, variables, vocab, s: Structure, translator: Translator):
    want = set(satisfying_tuples(f, s, variables))
    tr = translator.formula_to_program(f, vocab, variables)
    interp, _ = eval_program(tr.program, s)
    got = set(interp[tr.predicate])
    if got != want:
        t = min(got ^ want)
        return t, t in want, t in got
    return None


def _replacements(f: Formula):
    """Smaller formulas obtained by replacing one subformula."""
    if f != TRUE:
        yield TRUE
    if f != FALSE:
        yield FALSE
    if isinstance(f, (Atom, NegAtom)):
        return
    if isinstance(f, (And, Or)):
        for i, g in enumerate(f.items):
            yield g
            rest = f.items[:i] + f.items[i + 1:]
            yield type(f)(rest)
            for h in _replacements(g):
                yield type(f)(f.items[:i] + (h,) + f.items[i + 1:])
    elif isinstance(f, Exists):
        for h in _replacements(f.body):
            yield Exists(f.var, h)
    elif isinstance(f, Let):
        yield f.body
        for i, c in enumerate(f.clauses):
            for h in _replacements(c.body):
                cl = f.clauses[:i] + (Clause(c.pred, c.head, h),) + f.clauses[i + 1:]
                yield Let(cl, f.body)
        for h in _replacements(f.body):
            yield Let(f.clauses, h)


def _size(f: Formula) -> int:
    return sum(1 for _ in subformulas(f))


def shrink_formula(f: Formula, variables, vocab, s: Structure, translator: Translator):
    def bad(g, t):
        if check_formula(g, vocab) or not free_vars(g) <= set(variables):
            return False
        try:
            return _formula_diff(g, variables, vocab, t, translator) is not None
        except Exception:
            return False

    changed = True
    while changed:
        changed = False
        for g in _replacements(f):
            if _size(g) < _size(f) and bad(g, s):
                f = g
                changed = True
                break
    s = _shrink_structure(s, lambda t: bad(f, t))
    return f, s


def check_equivalence_formula(f: Formula, cfg: GenConfig, vocab: Vocabulary | None = None,
                              variables: Sequence[str] | None = None, translator: Translator = DEFAULT,
                              structures: int = 5, rng: random.Random | None = None,
                              structure_list: Sequence[Structure] | None = None) -> Discrepancy | None:
    """Compare eval_formula with the program produced by formula_to_program."""
    rng = rng or cfg.rng("check-formula")
    vocab = vocab or default_vocabulary()
    variables = tuple(sorted(free_vars(f)) if variables is None else variables)
    pool = list(structure_list) if structure_list is not None else [gen_structure(vocab, cfg, rng)
                                                                     for _ in range(structures)]
    for s in pool:
        diff = _formula_diff(f, variables, vocab, s, translator)
        if diff is None:
            continue
        t, want, got = diff
        d = Discrepancy("formula", f, s, t, want, got, cfg.seed, variables=variables, vocab=vocab)
        g, small = shrink_formula(f, variables, vocab, s, translator)
        t2, want2, got2 = _formula_diff(g, variables, vocab, small, translator)
        d.shrunk = Discrepancy("formula", g, small, t2, want2, got2, cfg.seed, variables=variables, vocab=vocab)
        return d
    return None


# --------------------------------------------------------------------------
# homomorphisms


def _table(n, k, fn):
    if k == 0:
        return fn(())
    return [_table(n, k - 1, lambda rest, a=a: fn((a,) + rest)) for a in range(n)]


def gen_embedding(v: Vocabulary, cfg: GenConfig, rng: random.Random) -> Homomorphism:
    """A random injective strong homomorphism: the source sits inside a possibly larger target."""
    src = gen_structure(v, cfg, rng)
    extra = rng.randint(0, 2)
    m = src.n + extra
    image = rng.sample(range(m), src.n)
    inv = {b: a for a, b in enumerate(image)}
    funs = {}
    for fn, table in src.functions.items():
        def val(args, table=table):
            if all(b in inv for b in args):
                return image[int(table[tuple(inv[b] for b in args)])]
            return rng.randrange(m)
        funs[fn] = _table(m, table.ndim, val)
    rels = {}
    for name, (k, ts) in src.relations.items():
        inside = {tuple(image[a] for a in t) for t in ts}
        outside = [t for t in itertools.product(range(m), repeat=k)
                   if not all(b in inv for b in t) and rng.random() < 0.5]
        rels[name] = sorted(inside | set(outside))
    tgt = Structure.make(m, funs, rels, src.positive, {k: a for k, (a, _) in src.relations.items()})
    return Homomorphism(src, tgt, tuple(image))


def gen_collapse(v: Vocabulary, cfg: GenConfig, rng: random.Random) -> Homomorphism:
    """A random surjection that is strong except that it may identify elements."""
    tgt = gen_structure(v, cfg, rng)
    m = tgt.n
    n = m + rng.randint(0, 2)
    mapping = list(range(m)) + [rng.randrange(m) for _ in range(n - m)]
    rng.shuffle(mapping)
    fibre = {b: [a for a in range(n) if mapping[a] == b] for b in range(m)}
    funs = {fn: _table(n, table.ndim, lambda args, table=table: rng.choice(
        fibre[int(table[tuple(mapping[a] for a in args)])])) for fn, table in tgt.functions.items()}
    rels = {name: [t for t in itertools.product(range(n), repeat=k) if tuple(mapping[a] for a in t) in set(ts)]
            for name, (k, ts) in tgt.relations.items()}
    src = Structure.make(n, funs, rels, tgt.positive, {k: a for k, (a, _) in tgt.relations.items()})
    return Homomorphism(src, tgt, tuple(mapping))


def gen_weak(v: Vocabulary, cfg: GenConfig, rng: random.Random) -> Homomorphism:
    """A homomorphism in the weak sense only: the target may gain tuples on the image."""
    h = gen_embedding(v, cfg, rng)
    tgt = h.target
    rels = {}
    for name, (k, ts) in tgt.relations.items():
        rels[name] = sorted(set(ts) | {t for t in itertools.product(range(tgt.n), repeat=k) if rng.random() < 0.4})
    tgt = Structure.make(tgt.n, tgt.functions, rels, tgt.positive, {k: a for k, (a, _) in tgt.relations.items()})
    return Homomorphism(h.source, tgt, h.mapping)


def _transport(f: Formula, h: Homomorphism, variables, rng: random.Random, attempts: int):
    """Look for a valuation true in the source whose image is false in the target."""
    src_true = 0
    for _ in range(attempts):
        val = {x: rng.randrange(h.source.n) for x in variables}
        if eval_formula(f, h.source, val):
            src_true += 1
            image = {x: h(a) for x, a in val.items()}
            if not eval_formula(f, h.target, image):
                return tuple(val[x] for x in variables), src_true
    return None, src_true


def check_homomorphism_preservation(cfg: GenConfig, triples: int | None = None, vocab: Vocabulary | None = None,
                                    rng: random.Random | None = None, stats: dict | None = None,
                                    check: Callable = check_homomorphism) -> Discrepancy | None:
    """Generate valid strong homomorphisms and formulas, and confirm truth moves along h."""
    rng = rng or cfg.rng("homomorphism")
    vocab = vocab or default_vocabulary()
    stats = stats if stats is not None else {}
    stats.setdefault("triples", 0)
    stats.setdefault("source_true", 0)
    for i in range(cfg.trials if triples is None else triples):
        collapse = i % 2 == 1
        h = (gen_collapse if collapse else gen_embedding)(vocab, cfg, rng)
        problems = check(h, distinct=not collapse)
        assert not problems, problems
        # a collapse identifies elements, so only formulas without != can be expected to transport
        variables = tuple(rng.sample(("X", "Y"), rng.randint(0, 2)))
        f = gen_formula(vocab, cfg, rng, free=variables, depth=rng.randint(1, 3),
                        keep_positive=(EQ,) if collapse else ())
        stats["triples"] += 1
        t, hits = _transport(f, h, variables, rng, 4)
        stats["source_true"] += bool(hits)
        if t is not None:
            return Discrepancy("homomorphism", f, h.source, t, True, False, cfg.seed, variables=variables,
                               vocab=vocab, extra={"h": h})
    return None


def weak_homomorphism_counterexample(cfg: GenConfig, attempts: int = 300, vocab: Vocabulary | None = None,
                                     rng: random.Random | None = None) -> Discrepancy | None:
    """With the complement condition dropped, a formula with a negated atom should stop transporting."""
    rng = rng or cfg.rng("weak-homomorphism")
    vocab = vocab or default_vocabulary()
    for _ in range(attempts):
        h = gen_weak(vocab, cfg, rng)
        assert not check_homomorphism(h, strong=False)
        variables = tuple(rng.sample(("X", "Y"), rng.randint(1, 2)))
        f = gen_formula(vocab, cfg, rng, free=variables, depth=rng.randint(1, 3))
        if not any(isinstance(g, NegAtom) for g in subformulas(f)):
            continue
        t, _ = _transport(f, h, variables, rng, 4)
        if t is not None:
            return Discrepancy("homomorphism", f, h.source, t, True, False, cfg.seed, variables=variables,
                               vocab=vocab, extra={"h": h})
    return None
