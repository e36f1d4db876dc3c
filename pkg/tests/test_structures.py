import random

import pytest

from fixlog.model import App, Var, Vocabulary
from fixlog.structures import (
    Homomorphism, Structure, UnboundVariable, check_homomorphism, clamp_arith, eval_term, succ, validate_structure,
)
from fixlog.harness import GenConfig, default_vocabulary, gen_collapse, gen_embedding, gen_structure


def codes(diags):
    return [d.code for d in diags]


def zero():
    return App("0", ())


def test_validate_ok():
    v = Vocabulary.make(functions={"s": 1})
    assert validate_structure(Structure.make(3, {"s": [1, 2, 2]}), v) == []


def test_validate_errors():
    v = Vocabulary.make(functions={"s": 1}, negatable={"p": 1})
    assert "TableEntryOutOfRange" in codes(validate_structure(Structure.make(3, {"s": [1, 5, 2]}, {"p": []},
                                                                             arities={"p": 1}), v))
    assert codes(validate_structure(Structure.make(0))) == ["EmptyUniverse"]
    missing = validate_structure(Structure.make(2), v)
    assert "MissingFunctionTable" in codes(missing) and "MissingRelation" in codes(missing)
    bad_tuple = Structure.make(3, {"s": [0, 0, 0]}, {"p": [(7,)]})
    assert "TableEntryOutOfRange" in codes(validate_structure(bad_tuple, v))
    wrong = Structure.make(3, {"s": [0, 0, 0]}, {"p": [(0, 1)]})
    assert "TupleArityMismatch" in codes(validate_structure(wrong, v))
    assert "EqualityStored" in codes(validate_structure(Structure.make(2, relations={"=": [(0, 0)]})))


def test_eval_term():
    s = succ(4)
    assert eval_term(App("s", (App("s", (zero(),)),)), s, {}) == 2
    assert eval_term(Var("X"), s, {"X": 3}) == 3
    a = clamp_arith(200)
    one = App("1", ())
    assert eval_term(App("plus", (App("times", (one, one)), one)), a, {}) == 2
    with pytest.raises(UnboundVariable):
        eval_term(Var("Y"), s, {})


def test_clamping():
    a = clamp_arith(10)
    assert a.apply("plus", (7, 8)) == 9
    assert a.apply("times", (3, 3)) == 9
    assert a.holds("lt", (2, 3)) and not a.holds("lt", (3, 3))


def test_identity_homomorphism():
    cfg = GenConfig(seed=1)
    v = default_vocabulary()
    for i in range(10):
        s = gen_structure(v, cfg, cfg.rng("s", i))
        assert check_homomorphism(Homomorphism(s, s, tuple(range(s.n)))) == []


def test_collapse_violates_complement():
    src = Structure.make(2, relations={"p": [(0,)]}, arities={"p": 1})
    tgt = Structure.make(1, relations={"p": [(0,)]}, arities={"p": 1})
    h = Homomorphism(src, tgt, (0, 0))
    assert "NegatableComplementNotPreserved" in codes(check_homomorphism(h))
    assert check_homomorphism(h, strong=False) == []


def test_zero_ary_homomorphism():
    src = Structure.make(1, relations={"p": [()]}, arities={"p": 0})
    tgt = Structure.make(2, relations={"p": [()]}, arities={"p": 0})
    assert check_homomorphism(Homomorphism(src, tgt, (1,))) == []


def test_function_not_preserved():
    src = succ(3)
    h = Homomorphism(src, src, (1, 2, 0))
    assert "FunctionNotPreserved" in codes(check_homomorphism(h))


def test_generated_homomorphisms_valid():
    cfg = GenConfig(seed=2)
    v = default_vocabulary()
    rng = random.Random(0)
    for _ in range(20):
        assert check_homomorphism(gen_embedding(v, cfg, rng)) == []
        assert check_homomorphism(gen_collapse(v, cfg, rng), distinct=False) == []


def test_terms_commute_with_homomorphisms():
    cfg = GenConfig(seed=4)
    v = default_vocabulary()
    rng = random.Random(1)
    c, f = App("c", ()), lambda t: App("f", (t,))
    terms = [Var("X"), c, f(Var("X")), f(f(c)), f(f(Var("X")))]
    for _ in range(20):
        h = gen_embedding(v, cfg, rng)
        for a in range(h.source.n):
            for t in terms:
                assert h(eval_term(t, h.source, {"X": a})) == eval_term(t, h.target, {"X": h(a)})


def test_dense_is_read_only():
    s = Structure.make(2, relations={"p": [(0,)]})
    with pytest.raises(ValueError):
        s.dense["p"][1] = True
