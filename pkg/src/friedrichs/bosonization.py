"""Fermionic pair operators, Bogoliubov-type generators and multicommutator series."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as cartesian
import logging
from math import factorial
from typing import Iterable, Mapping, Sequence, Union

from .algebra import commute
from .coefficient import Coefficient, ONE
from .diagram import Diagram
from .dynamics import BudgetExceeded
from .expression import Expression, Term, canonicalize
from .symbols import KernelKind, KernelSymbol, Statistics, annihilator, creator

__all__ = [
    "Lattice",
    "DropCounter",
    "PairOperatorSpec",
    "BogoliubovGenerator",
    "BudgetExceeded",
    "NonScalarError",
    "expand_pair_operator",
    "pair_commutator",
    "approximate_ccr_rhs",
    "build_generator",
    "number_operator",
    "multicommutator_series",
    "vacuum_expectation",
    "vacuum_part",
    "mode_creator",
    "mode_annihilator",
]

log = logging.getLogger(__name__)

FERMI = Statistics.FERMI
Momentum = Union[int, tuple[int, ...]]
# amplitude: a symbol name (kept as scalar vertices f[p], f[p]†) or exact values per momentum
Amplitude = Union[str, Mapping[Momentum, object]]


class NonScalarError(ValueError):
    """Vacuum expectation requested of a term carrying symbolic scalar factors."""


def _add(p: Momentum, k: Momentum, sign: int = 1) -> Momentum:
    if isinstance(p, tuple):
        return tuple(a + sign * b for a, b in zip(p, k))
    return p + sign * k


def _neg(k: Momentum) -> Momentum:
    return tuple(-a for a in k) if isinstance(k, tuple) else -k


def _label(p: Momentum) -> str:
    return "(" + ",".join(map(str, p)) + ")" if isinstance(p, tuple) else str(p)


@dataclass(frozen=True)
class Lattice:
    points: tuple[Momentum, ...]

    def __post_init__(self):
        pts = tuple(tuple(p) if isinstance(p, (list, tuple)) else int(p) for p in self.points)
        if len(set(pts)) != len(pts):
            raise ValueError("lattice points must be distinct")
        dims = {len(p) if isinstance(p, tuple) else 0 for p in pts}
        if len(dims) > 1:
            raise ValueError("lattice points must share one dimension")
        object.__setattr__(self, "points", pts)

    @classmethod
    def interval(cls, lo: int, hi: int) -> "Lattice":
        return cls(tuple(range(lo, hi + 1)))

    def __contains__(self, p) -> bool:
        return p in self._set

    @property
    def _set(self) -> frozenset:
        return frozenset(self.points)

    def mode_of(self) -> dict[str, int]:
        """Label → 1-based mode index, in lattice order."""
        return {_label(p): i for i, p in enumerate(self.points, start=1)}

    def __len__(self):
        return len(self.points)


@dataclass
class DropCounter:
    """Counts terms dropped because a shifted momentum left the lattice."""

    count: int = 0

    def bump(self, n: int = 1):
        self.count += n


def mode_creator(p: Momentum) -> KernelSymbol:
    return creator(_label(p), KernelKind.MODE)


def mode_annihilator(p: Momentum) -> KernelSymbol:
    return annihilator(_label(p), KernelKind.MODE)


def _amp(f: Amplitude, p: Momentum, conj: bool) -> tuple[Coefficient, list[KernelSymbol]]:
    """Coefficient and scalar vertices for f_p (or its conjugate)."""
    if isinstance(f, str):
        name = f"{f}[{_label(p)}]"
        return ONE, [KernelSymbol(name + ("†" if conj else ""), 0, 0)]
    val = Coefficient.coerce(f.get(p, 0))
    return (val.conjugate() if conj else val), []


def _support(f: Amplitude, lattice: Lattice) -> Iterable[Momentum]:
    if isinstance(f, str):
        return lattice.points
    return [p for p in lattice.points if p in f and not Coefficient.coerce(f[p]).is_zero()]


def _quadratic(coeff, scalars, creators_: Sequence[Momentum], annihilators_: Sequence[Momentum]) -> Term:
    """coeff · Π scalars · a*_{c_1} … a*_{c_r} a_{d_1} … a_{d_s} (operator order as written)."""
    verts = list(scalars)
    ext_left = []
    for p in reversed(creators_):
        verts.append(mode_creator(p))
        ext_left.append((len(verts) - 1, 1))
    ext_right = []
    for p in annihilators_:
        verts.append(mode_annihilator(p))
        ext_right.append((len(verts) - 1, 1))
    if not verts:
        return Term(coeff, Diagram.identity())
    return Term(coeff, Diagram(tuple(verts), (), tuple(ext_left), tuple(ext_right)))


@dataclass(frozen=True)
class PairOperatorSpec:
    """c*_k(f) = Σ_p f_p a*_p a*_{p−k} (``c_dagger``) or its adjoint c_k(f) (``c``)."""

    k: Momentum
    f: Amplitude
    kind: str = "c_dagger"

    def __post_init__(self):
        if self.kind not in ("c", "c_dagger"):
            raise ValueError("kind must be 'c' or 'c_dagger'")


def expand_pair_operator(spec: PairOperatorSpec, lattice: Lattice, drops: DropCounter | None = None) -> Expression:
    terms = []
    dropped = 0
    for p in _support(spec.f, lattice):
        q = _add(p, spec.k, -1)
        if q not in lattice:
            dropped += 1
            continue
        if spec.kind == "c_dagger":
            c, sc = _amp(spec.f, p, conj=False)
            terms.append(_quadratic(c, sc, [p, q], []))
        else:
            c, sc = _amp(spec.f, p, conj=True)
            terms.append(_quadratic(c, sc, [], [q, p]))
    if dropped:
        log.info("pair operator k=%s: dropped %d out-of-lattice terms", spec.k, dropped)
        if drops is not None:
            drops.bump(dropped)
    return canonicalize(Expression(FERMI, terms))


def pair_commutator(k, f: Amplitude, k_prime, g: Amplitude, lattice: Lattice, drops: DropCounter | None = None) -> Expression:
    """[c_k(f), c*_{k'}(g)] computed by the contraction engine."""
    c = expand_pair_operator(PairOperatorSpec(k, f, "c"), lattice, drops)
    cd = expand_pair_operator(PairOperatorSpec(k_prime, g, "c_dagger"), lattice, drops)
    return commute(c, cd)


def approximate_ccr_rhs(k, f: Amplitude, k_prime, g: Amplitude, lattice: Lattice) -> Expression:
    """The six displayed summands of the near-CCR relation, written out directly.

    A summand for (p, q) is kept only when both pair operators have it on
    the lattice (p, p−k, q, q−k' ∈ lattice), matching what expansion keeps.
    """
    terms: list[Term] = []
    lat = lattice
    fs = set(_support(f, lat))
    gs = set(_support(g, lat))

    def ok(p, q):
        return p in fs and _add(p, k, -1) in lat and q in gs and _add(q, k_prime, -1) in lat

    def amp_pair(p, q):
        cf, sf = _amp(f, p, conj=True)
        cg, sg = _amp(g, q, conj=False)
        return cf * cg, sf + sg

    for p in lat.points:
        # δ_{k,k'} ⟨f, g⟩
        if k == k_prime and ok(p, p):
            c, s = amp_pair(p, p)
            terms.append(_quadratic(c, s, [], []))
        # − δ_{k,−k'} Σ f̄_p g_{p−k}
        q = _add(p, k, -1)
        if k == _neg(k_prime) and ok(p, q):
            c, s = amp_pair(p, q)
            terms.append(_quadratic(-c, s, [], []))
        # − f̄_p g_p a*_{p−k'} a_{p−k}
        if ok(p, p):
            c, s = amp_pair(p, p)
            terms.append(_quadratic(-c, s, [_add(p, k_prime, -1)], [_add(p, k, -1)]))
        # − f̄_p g_{p−k+k'} a*_{p−k+k'} a_p
        q = _add(_add(p, k, -1), k_prime)
        if ok(p, q):
            c, s = amp_pair(p, q)
            terms.append(_quadratic(-c, s, [q], [p]))
        # + f̄_p g_{p−k} a*_{p−k−k'} a_p
        q = _add(p, k, -1)
        if ok(p, q):
            c, s = amp_pair(p, q)
            terms.append(_quadratic(c, s, [_add(q, k_prime, -1)], [p]))
        # + f̄_p g_{p+k'} a*_{p+k'} a_{p−k}
        q = _add(p, k_prime)
        if ok(p, q):
            c, s = amp_pair(p, q)
            terms.append(_quadratic(c, s, [q], [_add(p, k, -1)]))
    return canonicalize(Expression(FERMI, terms))


@dataclass(frozen=True)
class BogoliubovGenerator:
    """B_n = Σ η_{k_1…k_n} a*_{k_1}…a*_{k_n} − h.c.

    ``eta`` is a symbol name (scalar vertices η[k…], η[k…]†) or a map from
    momentum tuples to exact values.
    """

    degree: int
    eta: Union[str, Mapping[tuple, object]]
    statistics: Statistics = Statistics.FERMI
    support: tuple | None = field(default=None)


def build_generator(gen: BogoliubovGenerator, lattice: Lattice) -> Expression:
    if gen.degree not in (2, 3, 4):
        raise ValueError(f"unsupported generator degree {gen.degree}; expected 2, 3 or 4")
    st = Statistics.parse(gen.statistics)
    if isinstance(gen.eta, str):
        ks_all = gen.support if gen.support is not None else tuple(cartesian(lattice.points, repeat=gen.degree))
        items = [(ks, None) for ks in ks_all]
    else:
        items = [(tuple(ks), Coefficient.coerce(v)) for ks, v in sorted(gen.eta.items(), key=lambda kv: repr(kv[0]))]
    terms = []
    for ks, val in items:
        if any(k not in lattice for k in ks):
            raise ValueError(f"generator momenta {ks} are not all on the lattice")
        lab = ",".join(_label(k) for k in ks)
        if val is None:
            eta = [KernelSymbol(f"{gen.eta}[{lab}]", 0, 0)]
            eta_c = [KernelSymbol(f"{gen.eta}[{lab}]†", 0, 0)]
            c = c_conj = ONE
        else:
            if val.is_zero():
                continue
            eta = eta_c = []
            c, c_conj = val, val.conjugate()
        # η a*_{k1}…a*_{kn}  −  η̄ a_{kn}…a_{k1}
        terms.append(_quadratic(c, eta, list(ks), []))
        terms.append(_quadratic(-c_conj, eta_c, [], list(reversed(ks))))
    return canonicalize(Expression(st, terms))


def number_operator(lattice: Lattice, statistics=FERMI) -> Expression:
    """𝒩 = Σ_k a*_k a_k over the lattice."""
    return canonicalize(
        Expression(Statistics.parse(statistics), [_quadratic(ONE, [], [p], [p]) for p in lattice.points])
    )


def multicommutator_series(
    A: Expression, B: Expression, n_max: int, budget: int = 100_000
) -> list[Expression]:
    """[(1/n!) [B, [B, … [B, A]]] for n = 0..n_max]."""
    if A.statistics is not B.statistics:
        raise ValueError("A and B must share statistics")
    out = [canonicalize(A)]
    cur = canonicalize(A)
    for n in range(1, n_max + 1):
        cur = commute(B, cur)
        if len(cur) > budget:
            raise BudgetExceeded(f"order {n} produced {len(cur)} terms > budget {budget}", out, n - 1)
        out.append(cur.scale(Coefficient(Fraction(1, factorial(n)))))
    return out


def vacuum_part(e: Expression) -> Expression:
    """Terms without external legs (the only ones with nonzero vacuum expectation)."""
    e = canonicalize(e)
    return Expression(e.statistics, [t for t in e.terms if t.diagram.legs == (0, 0)])


def vacuum_expectation(e: Expression) -> Coefficient:
    """⟨Ω, e Ω⟩ = sum of coefficients of leg-free terms whose δ-lines already evaluated."""
    total = Coefficient(0)
    for t in vacuum_part(e).terms:
        if t.diagram.vertices:
            names = ", ".join(sorted({v.name for v in t.diagram.vertices}))
            raise NonScalarError(f"vacuum term still carries symbolic factors: {names}")
        total = total + t.coeff
    return total
