"""Numeric and rewrite-rule ground truth for the symbolic engine."""

from .equivalence import (
    OperatorPolynomial,
    Report,
    assert_equivalent,
    choose_space,
    kernel_symbols,
    point_labels,
    random_kernels,
)
from .fock import (
    DimensionBudgetError,
    MatrixOperator,
    MissingKernelError,
    ModeSpace,
    NumericKernel,
    apply,
    diagram_tensor,
    dimension_budget,
    kernel_tensor,
    ladder,
    realize,
)
from .reorder import Letter, parse_word, reorder_oracle, word_expression

__all__ = [
    "OperatorPolynomial",
    "Report",
    "assert_equivalent",
    "choose_space",
    "kernel_symbols",
    "point_labels",
    "random_kernels",
    "DimensionBudgetError",
    "MatrixOperator",
    "MissingKernelError",
    "ModeSpace",
    "NumericKernel",
    "apply",
    "diagram_tensor",
    "dimension_budget",
    "kernel_tensor",
    "ladder",
    "realize",
    "Letter",
    "parse_word",
    "reorder_oracle",
    "word_expression",
]
