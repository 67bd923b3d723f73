"""Seeded numeric equivalence checks between symbolic expressions and operator products."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import json
from math import comb
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from ..expression import Expression
from ..symbols import KernelKind, KernelSymbol, Statistics
from .fock import DimensionBudgetError, ModeSpace, apply, dimension_budget

# Bose spaces are shrunk (fewer modes) until the largest annihilated block
# in a realization stays below this many entries.
WORK_LIMIT = 5_000_000

__all__ = [
    "OperatorPolynomial",
    "Report",
    "assert_equivalent",
    "random_kernels",
    "kernel_symbols",
    "point_labels",
    "choose_space",
]


@dataclass(frozen=True)
class OperatorPolynomial:
    """Σ c_i · E_{i,1} E_{i,2} … as genuine operator products (realized by successive application)."""

    words: tuple[tuple[complex, tuple[Expression, ...]], ...]

    @classmethod
    def word(cls, *factors: Expression, coeff: complex = 1) -> "OperatorPolynomial":
        return cls(((coeff, tuple(factors)),))

    def __add__(self, other: "OperatorPolynomial") -> "OperatorPolynomial":
        return OperatorPolynomial(self.words + other.words)

    def __sub__(self, other: "OperatorPolynomial") -> "OperatorPolynomial":
        return OperatorPolynomial(self.words + tuple((-c, f) for c, f in other.words))

    @property
    def statistics(self) -> Statistics:
        stats = {e.statistics for _, fs in self.words for e in fs}
        if len(stats) != 1:
            raise ValueError("operator polynomial mixes statistics or is empty")
        return stats.pop()


Operand = Union[Expression, OperatorPolynomial]


def _as_poly(x: Operand) -> OperatorPolynomial:
    if isinstance(x, OperatorPolynomial):
        return x
    return OperatorPolynomial.word(x)


def _expressions(x: Operand) -> list[Expression]:
    return [e for _, fs in _as_poly(x).words for e in fs]


def kernel_symbols(exprs: Iterable[Expression]) -> dict[str, KernelSymbol]:
    """Opaque kernels needing numbers, keyed by base name (adjoints and composites resolve)."""
    out: dict[str, KernelSymbol] = {}

    def visit(sym: KernelSymbol):
        if sym.kind is not KernelKind.KERNEL or sym.is_unit:
            return
        if sym.provenance is not None:
            for v in sym.provenance.source.vertices:
                visit(v)
            return
        base = sym.adjoint() if sym.name.endswith("†") else sym
        out.setdefault(base.name, base)

    for e in exprs:
        for t in e.terms:
            for v in t.diagram.vertices:
                visit(v)
    return out


def point_labels(exprs: Iterable[Expression]) -> list[str]:
    labels: set[str] = set()

    def visit(sym: KernelSymbol):
        if sym.kind is not KernelKind.KERNEL:
            labels.add(sym.name)
        elif sym.provenance is not None:
            for v in sym.provenance.source.vertices:
                visit(v)

    for e in exprs:
        for t in e.terms:
            for v in t.diagram.vertices:
                visit(v)
    return sorted(labels)


def random_kernels(symbols: Mapping[str, KernelSymbol], M: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Complex standard Gaussian entries (E|z|² = 1), drawn in sorted name order."""
    out = {}
    for name in sorted(symbols):
        sym = symbols[name]
        shape = (M,) * (sym.n_left + sym.m_right)
        out[name] = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    return out


def _max_legs(e: Expression, side: int) -> int:
    return max((t.diagram.legs[side] for t in e.terms), default=0)


def _demand(poly: OperatorPolynomial) -> tuple[int, int]:
    """(annihilations needed to see every term, creations along the longest chain)."""
    need_n0 = 0
    creators = 0
    for _, fs in poly.words:
        need_n0 = max(need_n0, sum(_max_legs(e, 1) for e in fs))
        creators = max(creators, sum(_max_legs(e, 0) for e in fs))
    return need_n0, creators


def choose_space(
    stats: Statistics,
    operands: Sequence[Operand],
    modes: Optional[int] = None,
    sector: Optional[int] = None,
    max_modes: int = 4,
) -> tuple[ModeSpace, int]:
    """Pick a ModeSpace and test-sector bound N0 that keep Bose truncation exact.

    Fermi: N0 = M (every state). Bose: cutoff = N0 + creations along any
    chain, so no intermediate state reaches the truncation edge.
    """
    stats = Statistics.parse(stats)
    if stats is Statistics.FERMI:
        M = modes or max_modes
        return ModeSpace(M, stats), M
    n0 = 0
    cre = 0
    for op in operands:
        a, c = _demand(_as_poly(op))
        n0, cre = max(n0, a), max(cre, c)
    n0 = max(n0, 1) if sector is None else sector
    cutoff = max(n0 + cre, 1)
    budget = dimension_budget()
    candidates = [modes] if modes else list(range(max_modes, 0, -1))
    depth = max(_demand(_as_poly(op))[0] for op in operands)
    for M in candidates:
        dim = (cutoff + 1) ** M
        if dim > budget:
            continue
        work = M**depth * dim * comb(n0 + M, M)
        if modes or work <= WORK_LIMIT or M == 1:
            return ModeSpace(M, stats, cutoff), n0
    raise DimensionBudgetError(
        f"no Bose space with cutoff {cutoff} and modes {candidates} fits the budget {budget}"
    )


def _realize_on(op: Operand, kernels, space: ModeSpace, block: np.ndarray, labels) -> np.ndarray:
    total = np.zeros_like(block)
    cache: dict = {}
    for c, fs in _as_poly(op).words:
        v = block
        for e in reversed(fs):
            v = apply(e, kernels, space, v, labels, cache)
        total += complex(c) * v
    return total


@dataclass
class Report:
    passed: bool
    tol: float
    seed: int
    trials: int
    modes: int
    cutoff: int
    sector: int
    deviations: list[float] = field(default_factory=list)
    counterexample: Optional[dict] = None

    @property
    def max_deviation(self) -> float:
        return max(self.deviations, default=0.0)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def assert_equivalent(
    lhs: Operand,
    rhs: Operand,
    trials: int = 20,
    tol: float = 1e-10,
    seed: int = 0,
    *,
    modes: Optional[int] = None,
    sector: Optional[int] = None,
    kernels: Optional[Mapping[str, np.ndarray]] = None,
    labels: Optional[Mapping[str, int]] = None,
) -> Report:
    """Compare realizations over ``trials`` seeded kernel draws.

    Only columns of the truncation-safe sector (particle number ≤ N0) are
    compared. Formal point labels get a fresh random mode binding per trial
    unless ``labels`` fixes them. A failure is reported, not raised.
    """
    exprs = _expressions(lhs) + _expressions(rhs)
    stats = {e.statistics for e in exprs}
    if len(stats) != 1:
        raise ValueError("assert_equivalent needs operands of one statistics")
    st = stats.pop()
    space, n0 = choose_space(st, [lhs, rhs], modes, sector)
    cols = space.sector(n0)
    block = np.zeros((space.dim, len(cols)), dtype=complex)
    block[cols, np.arange(len(cols))] = 1
    syms = kernel_symbols(exprs)
    names = point_labels(exprs)
    report = Report(True, tol, seed, trials, space.modes, space.cutoff, n0)
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        ks = dict(kernels) if kernels is not None else random_kernels(syms, space.modes, rng)
        lab = dict(labels) if labels is not None else {n: int(rng.integers(1, space.modes + 1)) for n in names}
        dev = float(np.max(np.abs(_realize_on(lhs, ks, space, block, lab) - _realize_on(rhs, ks, space, block, lab)), initial=0.0))
        report.deviations.append(dev)
        if not dev <= tol and report.passed:
            report.passed = False
            report.counterexample = {
                "trial": trial,
                "seed": [seed, trial],
                "deviation": dev,
                "labels": lab,
                "kernels": {k: [[z.real, z.imag] for z in np.ravel(v)] for k, v in sorted(ks.items())},
            }
    return report
