from concurrent.futures import ThreadPoolExecutor

from hypothesis import given, strategies as st
import pytest

from friedrichs.algebra import (
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
from friedrichs.diagram import canonical_form
from friedrichs.expression import Expression, Term, canonicalize
from friedrichs.oracle import OperatorPolynomial, assert_equivalent
from friedrichs.symbols import KernelKind, MixedStatisticsError, Statistics, creator

from helpers import a, adag, expression, monomial, op, word

F, B = Statistics.FERMI, Statistics.BOSE


def golden_product():
    """a1 a2 · a3* a4* written out by repeated CAR."""
    return expression(
        "fermi",
        monomial(1, [(3, 2), (4, 1)]),
        monomial(-1, [(3, 1), (4, 2)]),
        monomial(-1, [(3, 2)], [4], [1]),
        monomial(1, [(3, 1)], [4], [2]),
        monomial(1, [(4, 2)], [3], [1]),
        monomial(-1, [(4, 1)], [3], [2]),
        monomial(1, [], [3, 4], [1, 2]),
    )


def test_golden_fermi_product():
    lhs = product(word(a(1), a(2)).terms[0], word(adag(3), adag(4)).terms[0], F)
    assert lhs == golden_product()
    assert len(lhs) == 7


def test_golden_normal_ordered_sign_is_plus():
    A = word(a(1), a(2)).terms[0]
    Bt = word(adag(3), adag(4)).terms[0]
    no = normal_ordered_product(A, Bt)
    full = product(A, Bt, F)
    # (−1)^{m_A n_B} = +1: the normal-ordered term enters with its own coefficient
    assert full.coefficient_of(no) == no.coeff


def test_bose_ccr():
    res, br = commutator(a("y", "bose").terms[0], adag("x", "bose").terms[0], B)
    assert br is Bracket.COMMUTATOR
    assert res == expression("bose", monomial(1, [("x", "y")], stats="bose"))
    assert product(a("y", "bose").terms[0], adag("x", "bose").terms[0], B) == expression(
        "bose", monomial(1, [], ["x"], ["y"]), monomial(1, [("x", "y")])
    )


def test_fermi_car_bracket_choice():
    res, br = commutator(a("y").terms[0], adag("x").terms[0], F)
    assert br is Bracket.ANTICOMMUTATOR
    assert res == expression("fermi", monomial(1, [("x", "y")]))


def test_fermi_even_parity_commutator():
    A = word(adag("x"), a("y")).terms[0]
    res, br = commutator(A, a("z").terms[0], F)
    assert br is Bracket.COMMUTATOR
    assert res == expression("fermi", monomial(-1, [("x", "z")], [], ["y"]))


@pytest.mark.parametrize(
    "lhs,rhs",
    [
        (lambda: (a("x"), a("y")), Expression.zero(F)),
        (lambda: (adag("x"), adag("y")), Expression.zero(F)),
    ],
)
def test_anticommutator_zero_cases(lhs, rhs):
    x, y = lhs()
    assert anticommutator_explicit(x.terms[0], y.terms[0]) == rhs


def test_anticommutator_delta():
    assert anticommutator_explicit(a("y").terms[0], adag("x").terms[0]) == expression(
        "fermi", monomial(1, [("x", "y")])
    )


def test_attached_product_edge_cases():
    assert attached_product(a("y").terms[0], adag("x").terms[0], F) == expression("fermi", monomial(1, [("x", "y")]))
    assert attached_product(adag("x", "bose").terms[0], a("y", "bose").terms[0], B).is_zero()


def test_attached_six_terms_signs():
    A = word(a(1), a(2)).terms[0]
    Bt = word(adag(3), adag(4)).terms[0]
    att = attached_product(A, Bt, F)
    assert len(att) == 6
    assert att == golden_product() - expression("fermi", monomial(1, [], [3, 4], [1, 2]))


def test_already_normal_ordered():
    A = op("A", 2, 0).terms[0]
    Bt = op("B", 1, 2).terms[0]
    assert product(A, Bt, F) == canonicalize(Expression(F, [normal_ordered_product(A, Bt)]))


def test_normal_ordered_leg_layout():
    A, Bt = op("A", 1, 1).terms[0], op("B", 1, 1).terms[0]
    d = normal_ordered_product(A, Bt).diagram
    assert d.legs == (2, 2)
    assert d.lines == ()
    # operator a*_{ext_left[2]} a*_{ext_left[1]}: A's creator is leftmost
    assert d.ext_left == ((1, 1), (0, 1))
    assert d.ext_right == ((0, 1), (1, 1))


def test_bose_normal_order_symmetric():
    A, Bt = op("A", 1, 2, "bose").terms[0], op("B", 2, 1, "bose").terms[0]
    ab = canonical_form(normal_ordered_product(A, Bt).diagram, False)
    ba = canonical_form(normal_ordered_product(Bt, A).diagram, False)
    assert ab.key == ba.key and ab.sign == ba.sign == 1


def test_number_operator_commutator_discrete():
    modes = ["1", "2", "3"]
    N = Expression.zero(B)
    for k in modes:
        N = N + Expression.of(B, Term(1, monomial(1, [], [k], [k], kind="mode").diagram))
    ap = Expression.of(B, creator("2", KernelKind.MODE))
    assert commute(N, ap) == ap


def test_bose_self_commutator_vanishes():
    A = op("A", 2, 2, "bose").terms[0]
    res, _ = commutator(A, A, B)
    assert res.is_zero()


def test_mixed_statistics_rejected():
    with pytest.raises(MixedStatisticsError):
        multiply(a("x", "bose"), a("y", "fermi"))


def test_canonicalize_cancels_and_is_idempotent():
    t = op("A", 1, 1)
    assert (t - t).is_zero()
    e = multiply(op("A", 1, 2), op("B", 2, 1))
    assert canonicalize(canonicalize(e)) == canonicalize(e)
    assert canonicalize(e).terms == canonicalize(canonicalize(e)).terms


def test_parallel_schedule_matches_sequential():
    x = op("A", 2, 2) + op("B", 1, 1)
    y = op("C", 2, 2) + op("D", 0, 1)
    with ThreadPoolExecutor(4) as ex:
        par = commute(x, y, ex)
    assert par.terms == commute(x, y).terms


arity = st.integers(0, 2)


@given(arity, arity, arity, arity, st.sampled_from(["bose", "fermi"]))
def test_product_matches_matrices(nA, mA, nB, mB, stats):
    A, Bx = op("A", nA, mA, stats), op("B", nB, mB, stats)
    rep = assert_equivalent(multiply(A, Bx), OperatorPolynomial.word(A, Bx), trials=2, modes=2 if stats == "bose" else 3)
    assert rep.passed, rep.deviations


@given(arity, arity, arity, arity)
def test_fermi_bracket_parity(nA, mA, nB, mB):
    A, Bx = op("A", nA, mA), op("B", nB, mB)
    res, br = commutator(A.terms[0], Bx.terms[0], F)
    rhs = OperatorPolynomial.word(A, Bx) + OperatorPolynomial.word(Bx, A, coeff=1 if br is Bracket.ANTICOMMUTATOR else -1)
    assert (br is Bracket.ANTICOMMUTATOR) == bool((nA + mA) * (nB + mB) % 2)
    assert assert_equivalent(res, rhs, trials=2, modes=3).passed


@given(arity, arity, arity, arity, st.sampled_from(["bose", "fermi"]))
def test_expression_level_brackets(nA, mA, nB, mB, stats):
    A, Bx = op("A", nA, mA, stats), op("B", nB, mB, stats)
    m = 2 if stats == "bose" else 3
    comm_rhs = OperatorPolynomial.word(A, Bx) - OperatorPolynomial.word(Bx, A)
    acomm_rhs = OperatorPolynomial.word(A, Bx) + OperatorPolynomial.word(Bx, A)
    assert assert_equivalent(commute(A, Bx), comm_rhs, trials=1, modes=m).passed
    assert assert_equivalent(anticommute(A, Bx), acomm_rhs, trials=1, modes=m).passed


def test_adjoint_reverses_products():
    A, Bx = op("A", 1, 2), op("B", 2, 1)
    assert multiply(A, Bx).adjoint() == multiply(Bx.adjoint(), A.adjoint())
