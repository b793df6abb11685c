"""Nominal anti-unification of terms-in-context modulo A, C and AC."""

from .enau import GeneralizationResult, RunResult, check_reversal, reversal_substitutions, run_enau
from .equality import alpha_eq, eq_modulo
from .eqvm import AtomMapping, eqvm, mapping_to_permutation
from .minimize import minimize_set, post_process, tic_subset, unique_lgg_a, unique_lgg_ac, unique_lgg_c
from .semantics import holds_constraint, holds_eq, holds_freshness, simplify_context
from .syntax import ParseError, parse_context, parse_problem, parse_term, show_context, show_term
from .terms import TermInContext, Theory

__all__ = [
    "AtomMapping",
    "GeneralizationResult",
    "ParseError",
    "RunResult",
    "TermInContext",
    "Theory",
    "alpha_eq",
    "check_reversal",
    "eq_modulo",
    "eqvm",
    "holds_constraint",
    "holds_eq",
    "holds_freshness",
    "mapping_to_permutation",
    "minimize_set",
    "parse_context",
    "parse_problem",
    "parse_term",
    "post_process",
    "reversal_substitutions",
    "run_enau",
    "show_context",
    "show_term",
    "simplify_context",
    "tic_subset",
    "unique_lgg_a",
    "unique_lgg_ac",
    "unique_lgg_c",
]
