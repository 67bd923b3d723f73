"""Products, attached products and (anti)commutators of normal-ordered terms.

Multi-vertex operands are treated in their collapsed view: the j-th
external leg on a side plays the role of slot j of a single vertex. No
numeric collapse is needed for that, only the leg orderings.
"""

from __future__ import annotations

from concurrent.futures import Executor
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from .configs import configs_for_arities
from .diagram import Diagram
from .expression import Expression, Term, as_term, canonicalize
from .symbols import MixedStatisticsError, Statistics

__all__ = [
    "Bracket",
    "normal_ordered_product",
    "attached_product",
    "product",
    "commutator",
    "anticommutator_explicit",
    "multiply",
    "commute",
    "anticommute",
    "signed_configs",
]


class Bracket(Enum):
    COMMUTATOR = "commutator"
    ANTICOMMUTATOR = "anticommutator"


@lru_cache(maxsize=None)
def signed_configs(m_A: int, n_B: int) -> tuple[tuple[tuple[int, ...], tuple[int, ...], int], ...]:
    """(pi, pi_prime, sign) for every config, in enumeration order."""
    return tuple((c.pi, c.pi_prime, c.sign) for c in configs_for_arities(m_A, n_B))


def _shift(slots, off):
    return tuple((v + off, j) for v, j in slots)


def _join(a: Diagram, b: Diagram):
    off = len(a.vertices)
    lines = a.lines + tuple(((v + off, j), (w + off, k)) for (v, j), (w, k) in b.lines)
    return a.vertices + b.vertices, lines, _shift(b.ext_left, off), _shift(b.ext_right, off)


def _normal_diagram(a: Diagram, b: Diagram) -> Diagram:
    verts, lines, bl, br = _join(a, b)
    # a*_{A..} a*_{B..} a_{A..} a_{B..}: B's creators sit at the bottom
    return Diagram(verts, lines, bl + a.ext_left, a.ext_right + br)


def _attached_terms(A: Term, B: Term, fermi: bool, single: bool = False) -> list[Term]:
    """Terms of the attached product; ``single`` keeps only C = 1 configs."""
    a, b = A.diagram, B.diagram
    m_A, n_B = len(a.ext_right), len(b.ext_left)
    if not m_A or not n_B:
        return []
    verts, lines, bl, br = _join(a, b)
    base = A.coeff * B.coeff
    neg = -base
    out = []
    for pi, pp, sign in signed_configs(m_A, n_B):
        if single and len(pi) != 1:
            break
        new_lines = tuple((bl[p - 1], a.ext_right[q - 1]) for p, q in zip(pi, pp))
        ext_left = tuple(s for j, s in enumerate(bl, start=1) if j not in pi) + a.ext_left
        ext_right = tuple(s for j, s in enumerate(a.ext_right, start=1) if j not in pp) + br
        c = neg if (fermi and sign < 0) else base
        out.append(Term(c, Diagram(verts, lines + new_lines, ext_left, ext_right)))
    return out


def _stats(stats) -> Statistics:
    return Statistics.parse(stats)


def normal_ordered_product(A, B) -> Term:
    """:AB: with coefficient c_A·c_B and no statistics sign."""
    A, B = as_term(A), as_term(B)
    return Term(A.coeff * B.coeff, _normal_diagram(A.diagram, B.diagram))


def attached_product(A, B, stats) -> Expression:
    """A∨B (Bose) or A⋎B (Fermi): all terms with at least one contraction."""
    st = _stats(stats)
    return canonicalize(Expression(st, _attached_terms(as_term(A), as_term(B), st is Statistics.FERMI)))


def _product_terms(A: Term, B: Term, fermi: bool) -> list[Term]:
    no = normal_ordered_product(A, B)
    if fermi and (len(A.diagram.ext_right) * len(B.diagram.ext_left)) & 1:
        no = Term(-no.coeff, no.diagram)
    return [no] + _attached_terms(A, B, fermi)


def product(A, B, stats) -> Expression:
    st = _stats(stats)
    return canonicalize(Expression(st, _product_terms(as_term(A), as_term(B), st is Statistics.FERMI)))


def _odd_pair(A: Term, B: Term) -> bool:
    return bool(((A.n + A.m) * (B.n + B.m)) & 1)


def _negated(ts: Iterable[Term]) -> list[Term]:
    return [Term(-t.coeff, t.diagram) for t in ts]


def commutator(A, B, stats) -> tuple[Expression, Bracket]:
    """The bracket the contraction formula evaluates directly.

    Bose: [A,B] = A∨B − B∨A. Fermi: same for even (n_A+m_A)(n_B+m_B),
    otherwise {A,B} = A⋎B + B⋎A.
    """
    st = _stats(stats)
    A, B = as_term(A), as_term(B)
    fermi = st is Statistics.FERMI
    ab = _attached_terms(A, B, fermi)
    ba = _attached_terms(B, A, fermi)
    if fermi and _odd_pair(A, B):
        return canonicalize(Expression(st, ab + ba)), Bracket.ANTICOMMUTATOR
    return canonicalize(Expression(st, ab + _negated(ba))), Bracket.COMMUTATOR


def anticommutator_explicit(A, B, stats=Statistics.FERMI) -> Expression:
    """AB + BA from two products."""
    st = _stats(stats)
    A, B = as_term(A), as_term(B)
    fermi = st is Statistics.FERMI
    return canonicalize(Expression(st, _product_terms(A, B, fermi) + _product_terms(B, A, fermi)))


# --- expression level -----------------------------------------------------


def _pair_commute(A: Term, B: Term, fermi: bool) -> list[Term]:
    ab = _attached_terms(A, B, fermi)
    ba = _negated(_attached_terms(B, A, fermi))
    if fermi and _odd_pair(A, B):
        # [A,B] = 2(−1)^{m_A n_B} :AB: + A⋎B − B⋎A
        no = normal_ordered_product(A, B)
        s = -2 if (A.m * B.n) & 1 else 2
        return [Term(no.coeff * s, no.diagram)] + ab + ba
    return ab + ba


def _pair_anticommute(A: Term, B: Term, fermi: bool) -> list[Term]:
    ab = _attached_terms(A, B, fermi)
    ba = _attached_terms(B, A, fermi)
    if fermi and _odd_pair(A, B):
        return ab + ba
    no = normal_ordered_product(A, B)
    s = -2 if (fermi and (A.m * B.n) & 1) else 2
    return [Term(no.coeff * s, no.diagram)] + ab + ba


def _pair_product(A: Term, B: Term, fermi: bool) -> list[Term]:
    return _product_terms(A, B, fermi)


def _bilinear(
    e1: Expression,
    e2: Expression,
    kernel: Callable[[Term, Term, bool], list[Term]],
    executor: Executor | None,
) -> Expression:
    if e1.statistics is not e2.statistics:
        raise MixedStatisticsError(
            f"cannot combine {e1.statistics.value} and {e2.statistics.value} expressions"
        )
    fermi = e1.statistics is Statistics.FERMI
    pairs = [(a, b) for a in e1.terms for b in e2.terms]
    if executor is None:
        chunks: Sequence[list[Term]] = [kernel(a, b, fermi) for a, b in pairs]
    else:
        chunks = list(executor.map(kernel, [p[0] for p in pairs], [p[1] for p in pairs], [fermi] * len(pairs)))
    return canonicalize(Expression(e1.statistics, [t for ch in chunks for t in ch]))


def multiply(e1: Expression, e2: Expression, executor: Executor | None = None) -> Expression:
    """Normal-ordered form of the operator product e1·e2."""
    return _bilinear(e1, e2, _pair_product, executor)


def commute(e1: Expression, e2: Expression, executor: Executor | None = None) -> Expression:
    """[e1, e2] = e1e2 − e2e1 for both statistics."""
    return _bilinear(e1, e2, _pair_commute, executor)


def anticommute(e1: Expression, e2: Expression, executor: Executor | None = None) -> Expression:
    """{e1, e2} = e1e2 + e2e1."""
    return _bilinear(e1, e2, _pair_anticommute, executor)

