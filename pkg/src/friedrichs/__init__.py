"""Exact normal ordering of CCR/CAR operator monomials via contraction diagrams."""

from .algebra import (
    Bracket,
    anticommutator_explicit,
    anticommute,
    attached_product,
    commutator,
    commute,
    multiply,
    normal_ordered_product,
    product,
)
from .coefficient import I, ONE, ZERO, Coefficient
from .configs import ContractionConfig, config_count, config_sign, configs_for_arities, enumerate_configs
from .diagram import Diagram, canonical_form, classify_legs, collapse, export_dot, is_acyclic
from .expression import Expression, Term, canonicalize
from .serialize import from_json, to_json
from .symbols import KernelKind, KernelSymbol, Monomial, Statistics, annihilator, creator

__all__ = [
    "Bracket",
    "anticommutator_explicit",
    "anticommute",
    "attached_product",
    "commutator",
    "commute",
    "multiply",
    "normal_ordered_product",
    "product",
    "I",
    "ONE",
    "ZERO",
    "Coefficient",
    "ContractionConfig",
    "config_count",
    "config_sign",
    "configs_for_arities",
    "enumerate_configs",
    "Diagram",
    "canonical_form",
    "classify_legs",
    "collapse",
    "export_dot",
    "is_acyclic",
    "Expression",
    "Term",
    "canonicalize",
    "from_json",
    "to_json",
    "KernelKind",
    "KernelSymbol",
    "Monomial",
    "Statistics",
    "annihilator",
    "creator",
]
