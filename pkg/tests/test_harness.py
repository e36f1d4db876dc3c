import random

from fixlog.evaluator import eval_program
from fixlog.model import And, Atom, NegAtom, Or, Program, Rule, Vocabulary, check_formula, check_program, subformulas
from fixlog.structures import Structure, UnboundVariable, check_homomorphism, succ, validate_structure
from fixlog.syntax import parse_formula_file, parse_program
from fixlog.harness import (
    MUTANTS, GenConfig, check_equivalence_formula, check_equivalence_program, check_homomorphism_preservation,
    default_vocabulary, fuzz, gen_formula, gen_nested, gen_program, gen_section, gen_structure, has_nested_let,
    restrict, sectioning, star_equations, weak_homomorphism_counterexample,
)
from fixlog.harness.checks import gen_weak
from fixlog.translate import Translator

from pathlib import Path

SAMPLES = Path(__file__).resolve().parent.parent / "samples"

PATH = """
substrate:
  neg edge/2.
superstrate:
  path/2.
path(X, Y) <- edge(X, Y).
path(X, Y) <- edge(X, Z) & path(Z, Y).
"""


def test_config_problems():
    assert GenConfig().problems() == []
    assert GenConfig(universe=(0, 3)).problems()
    assert GenConfig(universe=(3, 2)).problems()
    assert GenConfig(max_clauses=0).problems()
    assert GenConfig(seed=-1).problems()


def test_singleton_universe():
    cfg = GenConfig(universe=(1, 1))
    v = default_vocabulary()
    assert all(gen_structure(v, cfg, cfg.rng("s", i)).n == 1 for i in range(10))


def test_generators_deterministic():
    v = default_vocabulary()
    a, b = GenConfig(seed=5), GenConfig(seed=5)
    assert gen_structure(v, a) == gen_structure(v, b)
    assert gen_formula(v, a) == gen_formula(v, b)
    assert gen_program(v, a) == gen_program(v, b)
    c = a.with_seed(6)
    assert [gen_formula(v, a, a.rng("f", i)) for i in range(10)] != [gen_formula(v, c, c.rng("f", i))
                                                                    for i in range(10)]


def test_generated_outputs_well_formed():
    cfg = GenConfig(seed=9)
    v = default_vocabulary()
    for i in range(200):
        assert validate_structure(gen_structure(v, cfg, cfg.rng("s", i)), v) == []
        assert check_formula(gen_formula(v, cfg, cfg.rng("f", i)), v) == []
        assert check_program(gen_program(v, cfg, cfg.rng("p", i))) == []


def test_depth_zero_is_literal():
    cfg = GenConfig(seed=3)
    v = default_vocabulary()
    for i in range(50):
        f = gen_formula(v, cfg, cfg.rng("d", i), depth=0)
        assert isinstance(f, (Atom, NegAtom))
        if isinstance(f, NegAtom):
            assert v.is_negatable(f.pred)


def test_nested_let_rate():
    cfg = GenConfig(seed=4, max_depth=3)
    v = default_vocabulary()
    hits = sum(has_nested_let(gen_formula(v, cfg, cfg.rng("n", i))) for i in range(300))
    assert hits >= 60


def test_path_program_ok():
    assert check_equivalence_program(parse_program(PATH), "path", GenConfig(seed=1)) is None


def test_unused_predicate_ok():
    p = Program(Vocabulary.make(negatable={"e": 1}, superstrate={"q": 1}), ())
    assert check_equivalence_program(p, "q", GenConfig(seed=1)) is None


def test_search_formula_ok():
    f, v = parse_formula_file((SAMPLES / "search.efpl").read_text())
    pool = [succ(6, {"p": [(w,) for w in range(6) if bits >> w & 1]}, {"p": 1}) for bits in range(0, 64, 7)]
    assert check_equivalence_formula(f, GenConfig(), v, structure_list=pool) is None


def test_dropped_disjunct_found_and_replayed():
    d = check_equivalence_program(parse_program(PATH), "path", GenConfig(seed=1), MUTANTS["dropped-disjunct"]())
    assert d is not None and d.kind == "program"
    bad = MUTANTS["dropped-disjunct"]()
    assert d.replay(bad) and not d.replay()
    small = d.minimal()
    assert small.replay(bad)
    assert small.structure.n <= d.structure.n and len(small.artifact.rules) <= len(d.artifact.rules)
    assert "program discrepancy" in d.to_text()


class SwapAndOr(Translator):
    """Turns the first conjunction in the constraint of the first rule into a disjunction."""

    def formula_to_program(self, f, vocab=None, variables=None):
        tr = super().formula_to_program(f, vocab, variables)
        rules = list(tr.program.rules)
        for i, r in enumerate(rules):
            if isinstance(r.constraint, And) and len(r.constraint.items) > 1:
                rules[i] = Rule(r.head, r.atoms, Or(r.constraint.items))
                break
        return type(tr)(Program(tr.program.vocab, tuple(rules)), tr.predicate, tr.variables)


def test_formula_mutation_found_and_shrunk():
    f, v = parse_formula_file((SAMPLES / "search.efpl").read_text())
    pool = [succ(6, {"p": [(0,), (2,)]}, {"p": 1}), succ(4, {"p": [(1,)]}, {"p": 1})]
    d = check_equivalence_formula(f, GenConfig(), v, translator=SwapAndOr(), structure_list=pool)
    assert d is not None and d.replay(SwapAndOr())
    assert d.minimal().replay(SwapAndOr())


# which side of the translation each seeded bug lives in
MUTANT_CHECKS = {"dropped-disjunct": "program", "missing-head-equality": "program", "skipped-widening": "formula"}


def test_mutants_caught_and_shrunk():
    for name, mutant in MUTANTS.items():
        [report] = fuzz(GenConfig(seed=0, trials=500), mutant(), checks=(MUTANT_CHECKS[name],))
        d = report.discrepancy
        assert d is not None and report.found_at < 500, name
        assert d.replay(mutant()) and d.minimal().replay(mutant())
        assert not d.minimal().replay()


def test_restrict():
    s = succ(4, {"p": [(0,), (3,)]}, {"p": 1})
    # the successor of 1 is 2, so {0, 1} is not closed
    assert restrict(s, [0, 1]) is None
    t = restrict(Structure.make(4, relations={"e": [(0, 3), (1, 2)]}), [1, 3, 0])
    assert t.n == 3 and t.relations["e"] == (2, ((2, 1),))


def test_homomorphism_preservation():
    stats = {}
    assert check_homomorphism_preservation(GenConfig(seed=2), triples=100, stats=stats) is None
    assert stats["triples"] == 100 and stats["source_true"] > 20


def test_weak_homomorphism_counterexample():
    d = weak_homomorphism_counterexample(GenConfig(seed=2))
    assert d is not None and d.replay()
    assert any(isinstance(g, NegAtom) for g in subformulas(d.artifact))
    assert check_homomorphism(d.extra["h"]) != []


def test_weak_generator_is_weak():
    cfg = GenConfig(seed=3)
    rng = random.Random(0)
    for _ in range(20):
        assert check_homomorphism(gen_weak(default_vocabulary(), cfg, rng), strong=False) == []


def test_star_equations():
    cfg = GenConfig(seed=5, universe=(1, 3))
    v = default_vocabulary()
    rng = cfg.rng("star")
    for i in range(30):
        inst = gen_nested(v, cfg, rng)
        s = gen_structure(v, cfg, rng)
        for name, (nested, flat) in star_equations(inst, s).items():
            assert set(nested) == set(flat), (i, name)


def test_sectioning():
    cfg = GenConfig(seed=6, universe=(1, 3))
    v = default_vocabulary()
    rng = cfg.rng("section")
    for _ in range(20):
        inst = gen_section(v, cfg, rng)
        assert 1 <= len(inst.params) <= 2
        assert sectioning(inst, gen_structure(v, cfg, rng)) is None


def test_sectioning_detects_skipped_widening():
    cfg = GenConfig(seed=6, universe=(2, 3))
    v = default_vocabulary()
    rng = cfg.rng("section")
    bad = MUTANTS["skipped-widening"]()
    found = False
    for _ in range(20):
        inst = gen_section(v, cfg, rng)
        s = gen_structure(v, cfg, rng)
        try:
            found = sectioning(inst, s, bad) is not None
        except UnboundVariable:
            # the unwidened clauses still mention the parameters
            found = True
        if found:
            break
    assert found


def test_fuzz_default_translator_clean():
    reports = fuzz(GenConfig(seed=3, trials=30))
    assert [r.name for r in reports] == ["program-to-formula", "formula-to-program", "homomorphism"]
    assert all(r.discrepancy is None and r.found_at is None for r in reports)


def test_fuzz_deterministic():
    a = fuzz(GenConfig(seed=8, trials=60), MUTANTS["missing-head-equality"](), checks=("program",))
    b = fuzz(GenConfig(seed=8, trials=60), MUTANTS["missing-head-equality"](), checks=("program",))
    assert a[0].found_at == b[0].found_at
    assert a[0].discrepancy.to_text() == b[0].discrepancy.to_text()


def test_eval_with_discrepancy_structure():
    d = check_equivalence_program(parse_program(PATH), "path", GenConfig(seed=1), MUTANTS["dropped-disjunct"]())
    lfp, _ = eval_program(d.artifact, d.structure)
    assert d.tuple in lfp["path"] or d.expected is False
