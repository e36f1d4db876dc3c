"""Deliberately broken translators, used to show the checks can fail."""
from __future__ import annotations

from ..model import And, Atom, Or, Program, Rule, Var, conj
from ..translate import Translator


class DroppedDisjunct(Translator):
    """merge_rules forgets the last rule of every predicate with two or more rules."""

    def merge_rules(self, p):
        out = super().merge_rules(p)
        for pred, (head, body) in out.items():
            if isinstance(body, Or) and len(body.items) > 1:
                out[pred] = (head, Or(body.items[:-1]))
        return out


class MissingHeadEquality(Translator):
    """flatten_heads leaves out the equality for the first head position."""

    def flatten_heads(self, p: Program) -> Program:
        flat = super().flatten_heads(p)
        rules = []
        for old, r in zip(p.rules, flat.rules):
            if not old.head.args:
                rules.append(r)
                continue
            items = list(r.constraint.items) if isinstance(r.constraint, And) else [r.constraint]
            first = r.head.args[0]
            items = [g for g in items if not (isinstance(g, Atom) and g.pred == "=" and g.args[0] == first)]
            rules.append(Rule(r.head, r.atoms, conj(items) if items else None))
        return Program(flat.vocab, tuple(rules))


class SkippedWidening(Translator):
    """eliminate_parameters does nothing, so parameters leak into rule bodies."""

    def _eliminate_parameters(self, clauses, body, names):
        return tuple(clauses), body


MUTANTS = {
    "dropped-disjunct": DroppedDisjunct,
    "missing-head-equality": MissingHeadEquality,
    "skipped-widening": SkippedWidening,
}
