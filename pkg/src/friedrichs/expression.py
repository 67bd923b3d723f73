"""Terms and canonical expressions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .coefficient import Coefficient, ONE, ZERO
from .diagram import Diagram, canonical_form, render_term
from .symbols import KernelSymbol, MixedStatisticsError, Monomial, Statistics

__all__ = ["Term", "Expression", "canonicalize", "as_term"]


@dataclass(frozen=True)
class Term:
    coeff: Coefficient
    diagram: Diagram

    def __post_init__(self):
        if not isinstance(self.coeff, Coefficient):
            object.__setattr__(self, "coeff", Coefficient.coerce(self.coeff))

    @classmethod
    def of(cls, kernel: KernelSymbol, coeff=1) -> "Term":
        return cls(Coefficient.coerce(coeff), Diagram.single(kernel))

    def scaled(self, c) -> "Term":
        return Term(self.coeff * Coefficient.coerce(c), self.diagram)

    @property
    def n(self) -> int:
        return len(self.diagram.ext_left)

    @property
    def m(self) -> int:
        return len(self.diagram.ext_right)

    def adjoint(self) -> "Term":
        return Term(self.coeff.conjugate(), self.diagram.adjoint())

    def __str__(self):
        return render_term(self.coeff, self.diagram)


def as_term(x) -> Term:
    if isinstance(x, Term):
        return x
    if isinstance(x, Monomial):
        return Term(ONE, Diagram.single(x.kernel))
    if isinstance(x, KernelSymbol):
        return Term(ONE, Diagram.single(x))
    if isinstance(x, Diagram):
        return Term(ONE, x)
    raise TypeError(f"cannot interpret {type(x).__name__} as a term")


class Expression:
    """Sum of terms under one statistics.

    Instances built through :func:`canonicalize` (which every algebra
    operation does) hold unique, sorted canonical terms; ``==`` compares
    canonical forms.
    """

    __slots__ = ("statistics", "terms", "_keys")

    def __init__(self, statistics: Statistics | str, terms: Iterable[Term] = (), _keys=None):
        self.statistics = Statistics.parse(statistics)
        self.terms: tuple[Term, ...] = tuple(as_term(t) for t in terms)
        self._keys = _keys

    @classmethod
    def of(cls, statistics, *terms) -> "Expression":
        return canonicalize(cls(statistics, terms))

    @classmethod
    def zero(cls, statistics) -> "Expression":
        return cls(statistics, (), ())

    @classmethod
    def identity(cls, statistics) -> "Expression":
        return canonicalize(cls(statistics, [Term(ONE, Diagram.identity())]))

    @property
    def is_canonical(self) -> bool:
        return self._keys is not None

    @property
    def keys(self) -> tuple:
        return canonicalize(self)._keys

    def __iter__(self) -> Iterator[Term]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return not canonicalize(self).terms

    def _check(self, other: "Expression"):
        if other.statistics is not self.statistics:
            raise MixedStatisticsError(
                f"cannot combine {self.statistics.value} and {other.statistics.value} expressions"
            )

    def __add__(self, other: "Expression") -> "Expression":
        if not isinstance(other, Expression):
            return NotImplemented
        self._check(other)
        return canonicalize(Expression(self.statistics, self.terms + other.terms))

    def __neg__(self) -> "Expression":
        return Expression(
            self.statistics, tuple(Term(-t.coeff, t.diagram) for t in self.terms), self._keys
        )

    def __sub__(self, other: "Expression") -> "Expression":
        if not isinstance(other, Expression):
            return NotImplemented
        return self + (-other)

    def scale(self, c) -> "Expression":
        c = Coefficient.coerce(c)
        if c.is_zero():
            return Expression.zero(self.statistics)
        return Expression(
            self.statistics, tuple(Term(t.coeff * c, t.diagram) for t in self.terms), self._keys
        )

    __rmul__ = lambda self, c: self.scale(c)  # noqa: E731

    def adjoint(self) -> "Expression":
        return canonicalize(Expression(self.statistics, [t.adjoint() for t in self.terms]))

    def __eq__(self, other):
        if not isinstance(other, Expression):
            return NotImplemented
        a, b = canonicalize(self), canonicalize(other)
        return (
            a.statistics is b.statistics
            and a._keys == b._keys
            and all(x.coeff == y.coeff for x, y in zip(a.terms, b.terms))
        )

    def __hash__(self):
        c = canonicalize(self)
        return hash((c.statistics, c._keys, tuple(t.coeff for t in c.terms)))

    def coefficient_of(self, term_or_diagram) -> Coefficient:
        """Coefficient of a structure in this expression, in this term's own leg order."""
        t = as_term(term_or_diagram)
        form = canonical_form(t.diagram, self.statistics is Statistics.FERMI)
        if form.diagram is None:
            return ZERO
        c = canonicalize(self)
        for key, term in zip(c._keys, c.terms):
            if key == form.key:
                return term.coeff * form.sign
        return ZERO

    def __repr__(self):
        return f"Expression({self.statistics.value}, {len(self.terms)} terms)"

    def __str__(self):
        if not self.terms:
            return "0"
        return "\n".join(str(t) for t in self.terms)


def canonicalize(e: Expression) -> Expression:
    """Rename, merge, drop zeros and sort. Idempotent."""
    if e._keys is not None:
        return e
    fermi = e.statistics is Statistics.FERMI
    acc: dict[tuple, list] = {}
    for t in e.terms:
        if t.coeff.is_zero():
            continue
        form = canonical_form(t.diagram, fermi)
        if form.diagram is None:
            continue
        c = t.coeff if form.sign > 0 else -t.coeff
        slot = acc.get(form.key)
        if slot is None:
            acc[form.key] = [c, form.diagram]
        else:
            slot[0] = slot[0] + c
    keys = []
    terms = []
    for key in sorted(acc):
        c, d = acc[key]
        if c.is_zero():
            continue
        keys.append(key)
        terms.append(Term(c, d))
    return Expression(e.statistics, terms, tuple(keys))
