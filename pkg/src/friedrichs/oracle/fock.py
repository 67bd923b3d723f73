"""Dense ladder matrices and numeric realization of expressions.

Basis states are occupation tuples (n_1, …, n_M) with mode 1 the most
significant digit; index 0 is the vacuum. Realization never forms
products of full matrices for long words: :func:`apply` pushes a block of
column vectors through annihilators, the kernel contraction, and then
creators, which is exact on any block whose particle numbers stay below
the cutoff along the way.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import os
from typing import Mapping, Optional

import numpy as np

from ..diagram import Diagram
from ..expression import Expression, Term, as_term
from ..symbols import KernelKind, KernelSymbol, Statistics

__all__ = [
    "ModeSpace",
    "NumericKernel",
    "MatrixOperator",
    "DimensionBudgetError",
    "MissingKernelError",
    "dimension_budget",
    "ladder",
    "kernel_tensor",
    "diagram_tensor",
    "apply",
    "realize",
]

DEFAULT_BUDGET = 4096
# entries of the intermediate annihilated block per chunk
CHUNK_ENTRIES = 1 << 22


class DimensionBudgetError(ValueError):
    pass


class MissingKernelError(KeyError):
    pass


def dimension_budget() -> int:
    raw = os.environ.get("FRIEDRICHS_DIM_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        val = int(raw)
    except ValueError:
        raise DimensionBudgetError(f"FRIEDRICHS_DIM_BUDGET={raw!r} is not an integer") from None
    if val <= 0:
        raise DimensionBudgetError("FRIEDRICHS_DIM_BUDGET must be positive")
    return val


@dataclass(frozen=True)
class ModeSpace:
    modes: int
    stats: Statistics
    cutoff: int = 1

    def __post_init__(self):
        object.__setattr__(self, "stats", Statistics.parse(self.stats))
        if self.modes < 1:
            raise ValueError("need at least one mode")
        if self.stats is Statistics.FERMI:
            object.__setattr__(self, "cutoff", 1)
        elif self.cutoff < 1:
            raise ValueError("Bose cutoff must be at least 1")
        if self.dim > dimension_budget():
            raise DimensionBudgetError(
                f"dimension {self.dim} of {self.modes} modes (cutoff {self.cutoff}) "
                f"exceeds the budget {dimension_budget()}"
            )

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** self.modes

    def occupations(self) -> np.ndarray:
        return _occupations(self.modes, self.cutoff)

    def sector(self, max_total: int) -> np.ndarray:
        """Basis indices with total particle number ≤ ``max_total``."""
        return np.flatnonzero(self.occupations().sum(axis=1) <= max_total)

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1
        return v


@lru_cache(maxsize=32)
def _occupations(M: int, c: int) -> np.ndarray:
    grids = np.indices((c + 1,) * M).reshape(M, -1).T
    grids.setflags(write=False)
    return grids


@lru_cache(maxsize=32)
def _annihilators(M: int, stats: Statistics, c: int) -> np.ndarray:
    """Stack (M, D, D) of annihilation matrices."""
    if stats is Statistics.FERMI:
        a = np.array([[0, 1], [0, 0]], dtype=complex)
        z = np.diag([1, -1]).astype(complex)
        eye = np.eye(2, dtype=complex)
        out = []
        for j in range(M):
            op = np.ones((1, 1), dtype=complex)
            for i in range(M):
                op = np.kron(op, z if i < j else a if i == j else eye)
            out.append(op)
    else:
        a = np.diag(np.sqrt(np.arange(1, c + 1)), k=1).astype(complex)
        eye = np.eye(c + 1, dtype=complex)
        out = []
        for j in range(M):
            op = np.ones((1, 1), dtype=complex)
            for i in range(M):
                op = np.kron(op, a if i == j else eye)
            out.append(op)
    arr = np.stack(out)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=32)
def _gathers(M: int, stats: Statistics, c: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Row-gather form of the ladders: (a_j W)[i] = fac[j, i] · W[src[j, i]].

    Every ladder matrix has at most one nonzero per row, so this is the
    dense matrix product done in O(D) per column.
    """
    ann = _annihilators(M, stats, c)
    out = []
    for mats in (ann, np.conj(np.transpose(ann, (0, 2, 1)))):
        src = np.argmax(np.abs(mats) > 0, axis=2)
        fac = np.take_along_axis(mats, src[:, :, None], axis=2)[:, :, 0]
        out += [src, fac]
    for arr in out:
        arr.setflags(write=False)
    return tuple(out)


@dataclass(frozen=True)
class NumericKernel:
    symbol: str
    tensor: np.ndarray


@dataclass(frozen=True)
class MatrixOperator:
    matrix: np.ndarray
    space: ModeSpace


def ladder(space: ModeSpace, mode: int, kind: str) -> MatrixOperator:
    """a_mode (``kind='annihilate'``) or a*_mode (``kind='create'``), mode 1-based."""
    if not 1 <= mode <= space.modes:
        raise ValueError(f"mode {mode} outside 1..{space.modes}")
    a = _annihilators(space.modes, space.stats, space.cutoff)[mode - 1]
    if kind in ("annihilate", "a"):
        return MatrixOperator(a.copy(), space)
    if kind in ("create", "adag"):
        return MatrixOperator(a.conj().T.copy(), space)
    raise ValueError(f"unknown ladder kind {kind!r}")


Kernels = Mapping[str, "np.ndarray | NumericKernel | complex"]


def _as_array(val) -> np.ndarray:
    if isinstance(val, NumericKernel):
        val = val.tensor
    return np.asarray(val, dtype=complex)


def kernel_tensor(
    sym: KernelSymbol,
    kernels: Kernels,
    M: int,
    labels: Mapping[str, int],
    _cache: Optional[dict] = None,
) -> np.ndarray:
    """Dense tensor of shape (M,)*(n+m): left axes first, then right axes."""
    if sym.kind is not KernelKind.KERNEL:
        try:
            mode = labels[sym.name]
        except KeyError:
            raise MissingKernelError(f"label {sym.name!r} is not bound to a mode") from None
        if not 1 <= mode <= M:
            raise ValueError(f"label {sym.name!r} bound to mode {mode} outside 1..{M}")
        e = np.zeros(M, dtype=complex)
        e[mode - 1] = 1
        return e
    if sym.is_unit:
        return np.array(1, dtype=complex)
    if _cache is not None and sym.name in _cache:
        return _cache[sym.name]
    shape = (M,) * (sym.n_left + sym.m_right)
    if sym.name in kernels:
        arr = _as_array(kernels[sym.name])
    elif sym.provenance is not None:
        arr = diagram_tensor(sym.provenance.source, kernels, M, labels, _cache)
    elif sym.name.endswith("†"):
        base = sym.adjoint()
        t = kernel_tensor(base, kernels, M, labels, _cache)
        n = base.n_left
        arr = np.conj(np.transpose(t, list(range(n, t.ndim)) + list(range(n))))
    else:
        raise MissingKernelError(f"no numeric kernel for {sym.name!r}")
    if arr.shape != shape:
        raise ValueError(f"kernel {sym.name!r} has shape {arr.shape}, expected {shape}")
    if _cache is not None:
        _cache[sym.name] = arr
    return arr


def diagram_tensor(
    d: Diagram, kernels: Kernels, M: int, labels: Mapping[str, int], _cache: Optional[dict] = None
) -> np.ndarray:
    """f_G with axes in external-leg order (ext_left then ext_right)."""
    letter: dict[tuple[int, str, int], int] = {}
    nxt = 0
    for (v, j), (w, k) in d.lines:
        letter[(v, "L", j)] = letter[(w, "R", k)] = nxt
        nxt += 1
    out = []
    for v, j in d.ext_left:
        letter[(v, "L", j)] = nxt
        out.append(nxt)
        nxt += 1
    for v, k in d.ext_right:
        letter[(v, "R", k)] = nxt
        out.append(nxt)
        nxt += 1
    operands = []
    for i, sym in enumerate(d.vertices):
        t = kernel_tensor(sym, kernels, M, labels, _cache)
        subs = [letter[(i, "L", j)] for j in range(1, sym.n_left + 1)]
        subs += [letter[(i, "R", k)] for k in range(1, sym.m_right + 1)]
        operands += [t, subs]
    if not operands:
        return np.array(1, dtype=complex)
    return np.einsum(*operands, out, optimize=len(d.vertices) > 2)


def _term_subscripts(d: Diagram):
    """Integer einsum subscripts: lines first, then ext_left, then ext_right."""
    letter: dict[tuple[int, str, int], int] = {}
    nxt = 0
    for (v, j), (w, k) in d.lines:
        letter[(v, "L", j)] = letter[(w, "R", k)] = nxt
        nxt += 1
    left = []
    for v, j in d.ext_left:
        letter[(v, "L", j)] = nxt
        left.append(nxt)
        nxt += 1
    right = []
    for v, k in d.ext_right:
        letter[(v, "R", k)] = nxt
        right.append(nxt)
        nxt += 1
    per_vertex = []
    for i, sym in enumerate(d.vertices):
        subs = [letter[(i, "L", j)] for j in range(1, sym.n_left + 1)]
        subs += [letter[(i, "R", k)] for k in range(1, sym.m_right + 1)]
        per_vertex.append(subs)
    return per_vertex, left, right, nxt


def apply(
    e: "Expression | Term",
    kernels: Kernels,
    space: ModeSpace,
    block: np.ndarray,
    labels: Mapping[str, int] | None = None,
    _cache: Optional[dict] = None,
) -> np.ndarray:
    """realize(e) @ block without forming realize(e) or any composite kernel."""
    block = np.asarray(block, dtype=complex)
    if block.ndim == 2 and block.shape[1] > 1:
        terms = e.terms if isinstance(e, Expression) else (as_term(e),)
        depth = max((t.diagram.legs[1] for t in terms), default=0)
        step = max(1, CHUNK_ENTRIES // (space.modes**depth * space.dim))
        if step < block.shape[1]:
            return np.concatenate(
                [apply(e, kernels, space, block[:, i : i + step], labels, _cache) for i in range(0, block.shape[1], step)],
                axis=1,
            )
    M = space.modes
    labels = labels or {}
    a_src, a_fac, c_src, c_fac = _gathers(M, space.stats, space.cutoff)
    block = np.asarray(block, dtype=complex)
    squeeze = block.ndim == 1
    if squeeze:
        block = block[:, None]
    out = np.zeros_like(block)
    terms = e.terms if isinstance(e, Expression) else (as_term(e),)
    groups: dict[tuple[int, int], list[Term]] = {}
    for t in terms:
        groups.setdefault(t.diagram.legs, []).append(t)
    for (L, Lp), group in sorted(groups.items()):
        W = block
        for _ in range(Lp):
            # prepend the next-leftmost annihilator index: W[y_1, …, y_L', D, S]
            W = np.stack([a_fac[y][:, None] * W[..., a_src[y], :] for y in range(M)])
        U = None
        for t in group:
            per_vertex, left, right, nxt = _term_subscripts(t.diagram)
            ops = []
            for sym, subs in zip(t.diagram.vertices, per_vertex):
                ops += [kernel_tensor(sym, kernels, M, labels, _cache), subs]
            ops += [W, right + [nxt, nxt + 1]]
            part = np.einsum(*ops, left + [nxt, nxt + 1], optimize="greedy")
            part = part * complex(t.coeff)
            U = part if U is None else U + part
        for _ in range(L):
            # a*_{x_1} acts first; x_1 is the leading axis
            U = sum(c_fac[x][:, None] * U[x][..., c_src[x], :] for x in range(M))
        out += U
    return out[:, 0] if squeeze else out


def realize(
    e: "Expression | Term",
    kernels: Kernels,
    space: ModeSpace,
    labels: Mapping[str, int] | None = None,
) -> MatrixOperator:
    """Dense matrix of e. For bosons only truncation-safe sectors are meaningful."""
    return MatrixOperator(apply(e, kernels, space, np.eye(space.dim, dtype=complex), labels, {}), space)
