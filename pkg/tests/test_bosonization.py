import numpy as np
import pytest
from hypothesis import given, strategies as st

from friedrichs.algebra import commute
from friedrichs.bosonization import (
    BogoliubovGenerator,
    BudgetExceeded,
    DropCounter,
    Lattice,
    NonScalarError,
    PairOperatorSpec,
    approximate_ccr_rhs,
    build_generator,
    expand_pair_operator,
    mode_annihilator,
    mode_creator,
    multicommutator_series,
    number_operator,
    pair_commutator,
    vacuum_expectation,
)
from friedrichs.coefficient import Coefficient
from friedrichs.expression import Expression, Term, canonicalize
from friedrichs.oracle import ModeSpace, assert_equivalent, realize
from friedrichs.symbols import Statistics

FERMI = Statistics.FERMI
LAT = Lattice.interval(-2, 2)
PAIRS = [(0, 0), (1, 1), (1, -1), (1, 0), (2, 1), (0, 1), (-1, 2)]


def same(a, b):
    return canonicalize(a - b).is_zero()


def test_lattice_basics():
    assert len(LAT) == 5 and 0 in LAT and 3 not in LAT
    assert LAT.mode_of()["-2"] == 1
    with pytest.raises(ValueError):
        Lattice((1, 1))
    sq = Lattice(((0, 0), (0, 1)))
    assert (0, 1) in sq and sq.mode_of()["(0,1)"] == 2


def test_single_point_support_and_drops():
    drops = DropCounter()
    e = expand_pair_operator(PairOperatorSpec(1, {0: 1}), LAT, drops)
    assert len(e) == 1 and drops.count == 0
    expand_pair_operator(PairOperatorSpec(1, {-2: 1}), LAT, drops)
    assert drops.count == 1


def test_zero_shift_pair_vanishes():
    assert expand_pair_operator(PairOperatorSpec(0, "f"), LAT).is_zero()


def test_pair_operators_are_adjoint():
    f = {p: Coefficient(p, 1) for p in LAT.points}
    cd = expand_pair_operator(PairOperatorSpec(1, f), LAT)
    c = expand_pair_operator(PairOperatorSpec(1, f, "c"), LAT)
    assert same(cd.adjoint(), c)


@pytest.mark.parametrize("k,kp", [(1, 2), (1, -1)])
def test_like_pairs_commute(k, kp):
    for kind in ("c", "c_dagger"):
        a = expand_pair_operator(PairOperatorSpec(k, "f", kind), LAT)
        b = expand_pair_operator(PairOperatorSpec(kp, "g", kind), LAT)
        assert commute(a, b).is_zero()


@pytest.mark.parametrize("k,kp", PAIRS)
def test_six_term_relation_symbolic(k, kp):
    assert same(pair_commutator(k, "f", kp, "g", LAT), approximate_ccr_rhs(k, "f", kp, "g", LAT))


@pytest.mark.parametrize("k,kp", [(1, 1), (1, -1), (2, 1)])
def test_six_term_relation_matrices(k, kp):
    rng = np.random.default_rng(5)
    f = {p: Coefficient(int(rng.integers(-3, 4)), int(rng.integers(-3, 4))) for p in LAT.points}
    g = {p: Coefficient(int(rng.integers(-3, 4)), int(rng.integers(-3, 4))) for p in LAT.points}
    lhs = pair_commutator(k, f, kp, g, LAT)
    rhs = approximate_ccr_rhs(k, f, kp, g, LAT)
    assert assert_equivalent(lhs, rhs, trials=1, modes=5, labels=LAT.mode_of()).passed


def test_normalized_pair_has_unit_scalar_part():
    f = {1: Coefficient(3, 0) / 5, 2: Coefficient(0, 4) / 5}
    e = pair_commutator(1, f, 1, f, LAT)
    assert vacuum_expectation(e) == Coefficient(1)


def test_generator_validation_and_shape():
    with pytest.raises(ValueError):
        build_generator(BogoliubovGenerator(5, "eta"), LAT)
    with pytest.raises(ValueError):
        build_generator(BogoliubovGenerator(2, {(0, 7): 1}), LAT)
    B = build_generator(BogoliubovGenerator(2, {(0, 1): Coefficient(1, 2)}), LAT)
    assert len(B) == 2
    assert (B + B.adjoint()).is_zero()
    M = realize(B, {}, ModeSpace(5, FERMI), LAT.mode_of()).matrix
    assert np.allclose(M, -M.conj().T)


def test_symbolic_generator_antisymmetry():
    B = build_generator(BogoliubovGenerator(2, "eta"), LAT)
    assert len(B) == 40


@given(st.integers(-3, 3), st.integers(-3, 3), st.sampled_from([(-1, 0), (0, 2), (1, -2)]))
def test_series_is_linear_in_amplitude(a, b, ks):
    lat = Lattice.interval(-1, 1) if max(map(abs, ks)) <= 1 else LAT
    eta = {ks: Coefficient(1, 1)}
    B = build_generator(BogoliubovGenerator(2, eta), lat)
    A1 = Expression.of(FERMI, Term.of(mode_creator(0)))
    A2 = Expression.of(FERMI, Term.of(mode_annihilator(ks[0])))
    combo = A1.scale(Coefficient(a)) + A2.scale(Coefficient(b))
    s1, s2, s = (multicommutator_series(x, B, 3) for x in (A1, A2, combo))
    for n in range(4):
        assert same(s[n], s1[n].scale(Coefficient(a)) + s2[n].scale(Coefficient(b)))


def test_series_zeroth_order_and_scaling():
    B = build_generator(BogoliubovGenerator(2, {(0, 1): 1}), LAT)
    A = Expression.of(FERMI, Term.of(mode_creator(0)))
    s = multicommutator_series(A, B, 2)
    assert same(s[0], A)
    assert same(s[2], commute(B, commute(B, A)).scale(Coefficient(1) / 2))


def test_series_matches_exponential_conjugation():
    # e^{-B} A e^{B} = Σ (1/n!) ad_{-B}^n A; here ad_B^n from the series with sign (−1)^n
    lat = Lattice.interval(0, 2)
    B = build_generator(BogoliubovGenerator(2, {(0, 1): Coefficient(1, 0) / 3, (1, 2): Coefficient(0, 1) / 4}), lat)
    A = Expression.of(FERMI, Term.of(mode_creator(0)))
    series = multicommutator_series(A, B, 14)
    space = ModeSpace(3, FERMI)
    lab = lat.mode_of()
    Bm = realize(B, {}, space, lab).matrix
    Am = realize(A, {}, space, lab).matrix
    w, U = np.linalg.eig(Bm)
    eB = U @ np.diag(np.exp(w)) @ np.linalg.inv(U)
    eBi = U @ np.diag(np.exp(-w)) @ np.linalg.inv(U)
    total = sum(realize(x, {}, space, lab).matrix for x in series if not x.is_zero())
    assert np.allclose(total, eB @ Am @ eBi, atol=1e-10)


def test_quartic_series_leg_terms_drop_from_vacuum():
    lat = Lattice.interval(0, 3)
    B = build_generator(BogoliubovGenerator(4, {(0, 1, 2, 3): 1}), lat)
    s = multicommutator_series(number_operator(lat), B, 2)
    assert any(t.diagram.legs != (0, 0) for t in s[2].terms)
    space = ModeSpace(4, FERMI)
    vac = space.vacuum()
    direct = np.vdot(vac, realize(s[2], {}, space, lat.mode_of()).matrix @ vac)
    assert abs(complex(vacuum_expectation(s[2])) - direct) < 1e-12
    assert vacuum_expectation(s[2]) == Coefficient(4)


def test_vacuum_expectation_cases():
    assert vacuum_expectation(number_operator(LAT)) == Coefficient(0)
    a, ad = (Expression.of(FERMI, Term.of(x(1))) for x in (mode_annihilator, mode_creator))
    from friedrichs.algebra import multiply

    assert vacuum_expectation(multiply(a, ad)) == Coefficient(1)
    b = Expression.of(FERMI, Term.of(mode_annihilator(2)))
    assert vacuum_expectation(multiply(b, ad)) == Coefficient(0)
    with pytest.raises(NonScalarError):
        vacuum_expectation(pair_commutator(1, "f", 1, "f", LAT))


def test_budget_exceeded_keeps_partial():
    B = build_generator(BogoliubovGenerator(2, "eta"), LAT)
    A = Expression.of(FERMI, Term.of(mode_creator(0)))
    with pytest.raises(BudgetExceeded) as info:
        multicommutator_series(A, B, 5, budget=50)
    assert info.value.order == len(info.value.partial) - 1
    assert len(info.value.partial[0]) == 1
