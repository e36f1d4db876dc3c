"""Existential fixed-point logic, liberal Datalog, and the translations between them."""
from .evaluator import (
    ClosureBoundExceeded, IterationTrace, TupleSpaceTooLarge, closure_bound, eval_formula, eval_plain_delta,
    eval_program, gamma_step, least_closed_point_oracle, lfp_clauses, satisfying_tuples,
)
from .model import (
    FALSE, TRUE, And, App, Atom, Clause, Diagnostic, Exists, FixlogError, Let, NegAtom, Or, Program, Rule,
    ValidationError, Var, Vocabulary, check_formula, check_program, free_vars,
)
from .structures import Homomorphism, Structure, check_homomorphism, clamp_arith, succ, validate_structure
from .syntax import (
    ParseError, parse_formula, parse_formula_file, parse_program, parse_program_file, parse_structure,
    print_formula, print_program, print_structure,
)
from .translate import (
    NormalForm, TranslationResult, Translator, UnknownTarget, alias_then, eliminate_parameters, flatten_heads,
    flatten_let, formula_to_program, merge_rules, normalize, prenex_dnf, program_to_formula, quantify_bodies,
)

__version__ = "0.1.0"
