"""Hypothesis strategies for diagrams and expressions."""

from hypothesis import strategies as st

from friedrichs.coefficient import Coefficient
from friedrichs.diagram import Diagram
from friedrichs.expression import Expression, Term, canonicalize
from friedrichs.symbols import KernelSymbol, Statistics

NAMES = ("A", "B", "C")


@st.composite
def diagrams(draw, max_vertices=4, max_arity=2):
    nv = draw(st.integers(1, max_vertices))
    verts = []
    for _ in range(nv):
        n = draw(st.integers(0, max_arity))
        m = draw(st.integers(0, max_arity))
        name = draw(st.sampled_from(NAMES))
        verts.append(KernelSymbol(f"{name}{n}{m}", n, m))
    lefts = [(v, j) for v, k in enumerate(verts) for j in range(1, k.n_left + 1)]
    rights = [(v, j) for v, k in enumerate(verts) for j in range(1, k.m_right + 1)]
    lefts = draw(st.permutations(lefts))
    rights = draw(st.permutations(rights))
    C = draw(st.integers(0, min(len(lefts), len(rights))))
    lines = tuple(zip(lefts[:C], rights[:C]))
    return Diagram(tuple(verts), lines, tuple(lefts[C:]), tuple(rights[C:])).validate()


coefficients = st.builds(
    Coefficient,
    st.fractions(min_value=-5, max_value=5, max_denominator=6),
    st.fractions(min_value=-5, max_value=5, max_denominator=6),
)


@st.composite
def expressions(draw, stats=None):
    s = draw(st.sampled_from([Statistics.BOSE, Statistics.FERMI])) if stats is None else stats
    terms = draw(st.lists(st.builds(Term, coefficients, diagrams(max_vertices=3)), max_size=4))
    return canonicalize(Expression(s, terms))
