"""Random generators and differential checks for the translations."""
from __future__ import annotations

from dataclasses import dataclass

from ..translate import DEFAULT, Translator
from .checks import (
    Discrepancy, check_equivalence_formula, check_equivalence_program, check_homomorphism_preservation,
    gen_collapse, gen_embedding, gen_weak, restrict, weak_homomorphism_counterexample,
)
from .gen import GenConfig, default_vocabulary, gen_formula, gen_program, gen_structure, has_nested_let
from .instances import gen_nested, gen_section, sectioning, star_equations
from .mutants import MUTANTS


@dataclass
class FuzzReport:
    name: str
    trials: int
    discrepancy: Discrepancy | None
    found_at: int | None = None


def fuzz(cfg: GenConfig, translator: Translator = DEFAULT, checks=("program", "formula", "homomorphism"),
         structures: int = 5):
    """Run the differential checks for ``cfg.trials`` trials each; the first discrepancy stops a check."""
    v = default_vocabulary()
    out = []
    if "program" in checks:
        found = None
        for i in range(cfg.trials):
            p = gen_program(v, cfg, cfg.rng("program", i))
            found = check_equivalence_program(p, None, cfg, translator, structures, cfg.rng("program-structures", i))
            if found:
                break
        out.append(FuzzReport("program-to-formula", cfg.trials, found, i if found else None))
    if "formula" in checks:
        found = None
        for i in range(cfg.trials):
            f = gen_formula(v, cfg, cfg.rng("formula", i))
            found = check_equivalence_formula(f, cfg, v, translator=translator, structures=structures,
                                              rng=cfg.rng("formula-structures", i))
            if found:
                break
        out.append(FuzzReport("formula-to-program", cfg.trials, found, i if found else None))
    if "homomorphism" in checks:
        out.append(FuzzReport("homomorphism", cfg.trials, check_homomorphism_preservation(cfg)))
    return out


__all__ = [
    "Discrepancy", "FuzzReport", "GenConfig", "MUTANTS", "check_equivalence_formula", "check_equivalence_program",
    "check_homomorphism_preservation", "default_vocabulary", "fuzz", "gen_collapse", "gen_embedding", "gen_formula",
    "gen_nested", "gen_program", "gen_section", "gen_structure", "gen_weak", "has_nested_let", "restrict",
    "sectioning", "star_equations", "weak_homomorphism_counterexample",
]
