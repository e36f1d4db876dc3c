import pytest

from fixlog.model import (
    FALSE, TRUE, And, App, Atom, ClashWithExistingName, Clause, Exists, Let, NegAtom, Or, Program, Rule, Var,
    Vocabulary, check_formula, check_program, conj, eq, fresh_symbol, free_vars, rename_let_predicates,
    substitute, subformulas,
)
from fixlog.harness import GenConfig, default_vocabulary, gen_formula

X, Y, Z, U = Var("X"), Var("Y"), Var("Z"), Var("U")


def codes(diags):
    return [d.code for d in diags]


def test_vocabulary_has_equality():
    v = Vocabulary.make()
    assert v.predicates["="] == (2, True)
    assert v.problems() == []


def test_vocabulary_problems():
    v = Vocabulary({"f": 1}, {"=": (2, True), "f": (1, True)})
    assert "DuplicateSymbol" in codes(v.problems())
    v = Vocabulary({}, {"=": (2, True), "q": (1, True)}, frozenset({"q"}))
    assert "NegatableSuperstrate" in codes(v.problems())
    assert "BadEquality" in codes(Vocabulary({}, {"=": (2, False)}).problems())


def test_negation_of_positive():
    v = Vocabulary.make(positive={"p": 1})
    assert codes(check_formula(NegAtom("p", (X,)), v)) == ["NegationOfPositive"]


def test_equality_ok():
    assert check_formula(Atom("=", (X, X)), Vocabulary.make()) == []


def test_recursive_let_ok():
    f = Let((Clause("P", ("X",), Atom("P", (X,))),), Atom("P", (X,)))
    assert check_formula(f, Vocabulary.make()) == []


def test_formula_errors():
    v = Vocabulary.make(functions={"f": 1}, negatable={"p": 1})
    assert codes(check_formula(Atom("p", (X, X)), v)) == ["ArityMismatch"]
    assert codes(check_formula(Atom("r", (X,)), v)) == ["UndeclaredSymbol"]
    assert codes(check_formula(Atom("p", (App("g", (X,)),)), v)) == ["UndeclaredSymbol"]
    dup = Let((Clause("P", ("X",), TRUE), Clause("P", ("X",), TRUE)), TRUE)
    assert "DuplicateLetPredicate" in codes(check_formula(dup, v))
    heads = Let((Clause("P", ("X", "X"), TRUE),), TRUE)
    assert "NonDistinctHeadVariables" in codes(check_formula(heads, v))
    shadow = Let((Clause("p", ("X",), TRUE),), TRUE)
    assert "LetPredicateShadowsVocabulary" in codes(check_formula(shadow, v))
    neg_let = Let((Clause("P", ("X",), TRUE),), NegAtom("P", (X,)))
    assert "NegationOfPositive" in codes(check_formula(neg_let, v))


def test_nested_shadowing_rejected():
    inner = Let((Clause("P", (), TRUE),), Atom("P", ()))
    outer = Let((Clause("P", (), inner),), Atom("P", ()))
    assert "LetPredicateShadowsVocabulary" in codes(check_formula(outer, Vocabulary.make()))


def test_diagnostic_paths():
    v = Vocabulary.make(positive={"p": 1})
    f = Let((Clause("P", ("X",), NegAtom("p", (X,))),), Atom("P", (X,)))
    [d] = check_formula(f, v)
    assert d.path.startswith("/let/clause0")


def path_vocab():
    return Vocabulary.make(negatable={"edge": 2, "e": 2}, superstrate={"path": 2, "p": 1, "q": 1})


def test_check_program():
    v = path_vocab()
    ok = Rule(Atom("path", (X, Y)), (Atom("path", (Z, Y)),), Atom("edge", (X, Z)))
    assert check_program(Program(v, (ok,))) == []
    neg = Rule(Atom("p", (X,)), (), NegAtom("q", (X,)))
    assert "NegatedSuperstrateAtom" in codes(check_program(Program(v, (neg,))))
    quant = Rule(Atom("p", (X,)), (), Exists("Y", Atom("e", (X, Y))))
    assert "QuantifierInRuleBody" in codes(check_program(Program(v, (quant,))))
    sub = Rule(Atom("p", (X,)), (), Atom("q", (X,)))
    assert "SuperstrateInSubstratePart" in codes(check_program(Program(v, (sub,))))
    head = Rule(Atom("edge", (X, Y)))
    assert "SubstrateHead" in codes(check_program(Program(v, (head,))))
    arity = Rule(Atom("p", (X, Y)))
    assert "ArityMismatch" in codes(check_program(Program(v, (arity,))))
    undeclared = Rule(Atom("p", (X,)), (Atom("zz", (X,)),))
    assert "UndeclaredSymbol" in codes(check_program(Program(v, (undeclared,))))


def test_free_vars():
    assert free_vars(Exists("Y", Atom("e", (X, Y)))) == {"X"}
    assert free_vars(Let((Clause("P", ("U",), eq(U, App("0", ()))),), Atom("P", (X,)))) == {"X"}
    f = Let((Clause("P", ("X",), eq(X, Y)),), Atom("P", (Z,)))
    assert free_vars(f) == {"Y", "Z"}


def test_substitute():
    assert substitute(Atom("e", (X, Y)), {"X": App("f", (Z,))}) == Atom("e", (App("f", (Z,)), Y))
    g = substitute(Exists("Y", Atom("e", (X, Y))), {"X": Y})
    assert isinstance(g, Exists) and g.var != "Y"
    assert g.body == Atom("e", (Y, Var(g.var)))
    f = Let((Clause("P", ("X",), eq(X, Y)),), Atom("P", (X,)))
    h = substitute(f, {"X": Z})
    assert h.clauses[0] == f.clauses[0]
    assert h.body == Atom("P", (Z,))


def test_substitute_simultaneous():
    f = Atom("e", (X, Y))
    assert substitute(f, {"X": Y, "Y": X}) == Atom("e", (Y, X))


def test_substitute_identity():
    cfg = GenConfig(seed=3)
    v = default_vocabulary()
    for i in range(30):
        f = gen_formula(v, cfg, cfg.rng("id", i))
        assert substitute(f, {x: Var(x) for x in free_vars(f)}) == f


def test_rename_let_predicates():
    f = Let((Clause("P", ("U",), eq(U, App("0", ()))),), Atom("P", (X,)))
    g = rename_let_predicates(f, {"P": "P1"})
    assert g == Let((Clause("P1", ("U",), eq(U, App("0", ()))),), Atom("P1", (X,)))
    assert rename_let_predicates(f, {}) == f
    with pytest.raises(ClashWithExistingName):
        rename_let_predicates(f, {"P": "p"}, Vocabulary.make(negatable={"p": 1}))


def test_fresh_symbol():
    assert fresh_symbol("x", {"x"}) == "x_g0"
    assert fresh_symbol("x", {"x", "x_g0"}) == "x_g1"
    assert fresh_symbol("Q", set()) == "Q_g0"
    assert fresh_symbol("Q_g0", {"Q_g0"}) == "Q_g1"


def test_let_equality_ignores_clause_order():
    a = Clause("P", (), TRUE)
    b = Clause("R", (), FALSE)
    assert Let((a, b), TRUE) == Let((b, a), TRUE)


def test_conj_disj():
    assert conj([]) == TRUE
    assert conj([Atom("p", (X,))]) == Atom("p", (X,))
    assert conj([And((Atom("p", (X,)),)), Atom("q", (X,))]) == And((Atom("p", (X,)), Atom("q", (X,))))


def test_let_predicates_only_positive():
    cfg = GenConfig(seed=5)
    v = default_vocabulary()
    for i in range(50):
        f = gen_formula(v, cfg, cfg.rng("pos", i))
        bound = {c.pred for g in subformulas(f) if isinstance(g, Let) for c in g.clauses}
        assert not any(isinstance(g, NegAtom) and g.pred in bound for g in subformulas(f))
