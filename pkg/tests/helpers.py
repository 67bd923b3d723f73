"""Small builders shared by the test modules."""

from friedrichs.expression import Expression
from friedrichs.symbols import KernelSymbol, Statistics, annihilator, creator


def a(label, stats="fermi"):
    return Expression.of(Statistics.parse(stats), annihilator(str(label)))


def adag(label, stats="fermi"):
    return Expression.of(Statistics.parse(stats), creator(str(label)))


def op(name, n, m, stats="fermi"):
    return Expression.of(Statistics.parse(stats), KernelSymbol(name, n, m))


def word(*factors):
    from friedrichs.algebra import multiply

    out = factors[0]
    for f in factors[1:]:
        out = multiply(out, f)
    return out


def monomial(coeff, deltas=(), creators=(), annihilators=(), stats="fermi", kind="point"):
    """coeff · Π δ(x, y) · a*_{c_1} … a*_{c_r} a_{d_1} … a_{d_s} written out as one Term.

    ``deltas`` are (x, y) label pairs; operator order is as written.
    """
    from friedrichs.diagram import Diagram
    from friedrichs.expression import Term

    verts, lines = [], []
    for x, y in deltas:
        verts += [creator(str(x), kind), annihilator(str(y), kind)]
        lines.append(((len(verts) - 2, 1), (len(verts) - 1, 1)))
    ext_left = []
    for x in reversed(creators):
        verts.append(creator(str(x), kind))
        ext_left.append((len(verts) - 1, 1))
    ext_right = []
    for y in annihilators:
        verts.append(annihilator(str(y), kind))
        ext_right.append((len(verts) - 1, 1))
    if not verts:
        return Term(coeff, Diagram.identity())
    return Term(coeff, Diagram(tuple(verts), tuple(lines), tuple(ext_left), tuple(ext_right)))


def expression(stats, *terms):
    from friedrichs.expression import canonicalize

    return canonicalize(Expression(Statistics.parse(stats), list(terms)))
