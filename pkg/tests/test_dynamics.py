import math
from fractions import Fraction
import warnings

import numpy as np
import pytest

from friedrichs.coefficient import Coefficient
from friedrichs.dynamics import (
    RadiusError,
    TwoBodyPotential,
    acyclic_expectation_sum,
    acyclicity_report,
    compare_hartree,
    duhamel_buckets,
    hartree_evolve,
    hartree_radius,
    interaction_potential,
    interpolation_value,
    mean_field,
    norm_bound,
    potential_symbol,
    product_state_expectation,
    random_hermitian,
    random_potential,
    star_bracket,
    tree_terms,
)
from friedrichs.expression import Expression, Term, canonicalize
from friedrichs.oracle import ModeSpace, OperatorPolynomial, assert_equivalent, ladder
from friedrichs.symbols import KernelSymbol, Statistics

BOSE = Statistics.BOSE
A11 = KernelSymbol("A", 1, 1)


def expm_h(H, t):
    w, U = np.linalg.eigh(H)
    return (U * np.exp(-1j * t * w)) @ U.conj().T


@pytest.fixture
def setup():
    rng = np.random.default_rng(11)
    M = 2
    T = random_hermitian(M, rng)
    V = random_potential(M, rng, 0.4)
    A = random_hermitian(M, rng)
    u0 = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    return T, V, A, u0 / np.linalg.norm(u0)


def test_interaction_potential(setup):
    T, V, _, _ = setup
    assert np.allclose(interaction_potential(T, V, 0.0).tensor, V)
    Vt = interaction_potential(T, V, 0.7).tensor
    assert math.isclose(TwoBodyPotential(Vt).norm, TwoBodyPotential(V).norm, rel_tol=1e-12)
    eps = np.array([0.3, -1.1])
    Vd = interaction_potential(np.diag(eps), V, 0.5).tensor
    phase = np.exp(1j * 0.5 * (eps[None, None, :, None] + eps[None, None, None, :] - eps[:, None, None, None] - eps[None, :, None, None]))
    assert np.allclose(Vd, V * phase)


def test_mean_field(setup):
    _, V, _, u = setup
    assert np.allclose(mean_field(V, np.zeros(2)), 0)
    Vu = mean_field(V, u)
    assert np.allclose(Vu, Vu.conj().T)
    delta = np.einsum("ac,bd->abcd", np.eye(3), np.eye(3))
    w = np.array([1, 2j, -1])
    assert np.allclose(mean_field(delta, w), np.vdot(w, w) * np.eye(3))


def test_hartree_linear_limit_and_norm(setup):
    T, V, _, u0 = setup
    ut = hartree_evolve(T, np.zeros((2,) * 4), u0, 0.9).u
    assert np.allclose(ut, expm_h(T, 0.9) @ u0, atol=1e-10)
    st = hartree_evolve(T, V, u0, 0.6)
    assert st.norm_drift <= 1e-8


def test_rk4_fourth_order(setup):
    T, V, _, u0 = setup
    ref = hartree_evolve(T, V, u0, 0.6, dt=1e-4).u
    e1 = np.linalg.norm(hartree_evolve(T, V, u0, 0.6, dt=0.04).u - ref)
    e2 = np.linalg.norm(hartree_evolve(T, V, u0, 0.6, dt=0.02).u - ref)
    assert 12 < e1 / e2 < 20


def test_radius_enforced(setup):
    T, V, A, u0 = setup
    L = hartree_radius(V, u0)
    with pytest.raises(RadiusError):
        hartree_evolve(T, V, u0, L)
    with pytest.raises(RadiusError):
        acyclic_expectation_sum(A, T, V, u0, -1.01 * L, 3, 2)


def test_star_bracket_counts():
    V = Term.of(potential_symbol(1))
    assert len(star_bracket(Term.of(A11), V)) == 4
    assert star_bracket(Term.of(KernelSymbol("S", 0, 0)), V).is_zero()
    with pytest.raises(ValueError):
        star_bracket(Expression.of(Statistics.FERMI, A11), Expression.of(Statistics.FERMI, potential_symbol(1)))


def test_low_order_buckets():
    b = duhamel_buckets(Term.of(A11), 1)
    assert [(x.k, x.ell) for x in b] == [(0, 1), (1, 1), (1, 2)]
    assert b[0].terms == Expression.of(BOSE, A11)
    assert b[1].terms.is_zero()
    expected = star_bracket(Term.of(A11), Term.of(potential_symbol(1))).scale(Coefficient(0, -1) / 2)
    assert canonicalize(b[2].terms - expected).is_zero()


def test_tree_recursion_and_acyclicity_law():
    buckets = duhamel_buckets(Term.of(A11), 4)
    report = acyclicity_report(buckets)
    for b in buckets:
        acyc, cyc = report[(b.k, b.ell)]
        if b.ell == b.k + 1:
            assert cyc == 0
            assert canonicalize(b.terms - tree_terms(Term.of(A11), b.k)).is_zero()
            assert len(b.terms) <= 4**b.k * math.factorial(b.k)
        else:
            assert acyc == 0


@pytest.mark.parametrize("k", [1, 2, 3])
def test_bucket_completeness_matches_matrices(k):
    A = Expression.of(BOSE, A11)
    total = Expression.zero(BOSE)
    for b in duhamel_buckets(Term.of(A11), k):
        if b.k == k:
            total = total + b.terms
    words = OperatorPolynomial.word(A)
    for j in range(1, k + 1):
        Vj = Expression.of(BOSE, Term.of(potential_symbol(j), Coefficient(Fraction(1, 2))))
        new = []
        for c, fs in words.words:
            new.append((c * -1j, fs + (Vj,)))
            new.append((c * 1j, (Vj,) + fs))
        words = OperatorPolynomial(tuple(new))
    assert assert_equivalent(total, words, trials=2, modes=2).passed


def fock_product_state(u, N):
    """(a*(u))^N Ω / √N! on a Bose space that holds N particles exactly."""
    M = len(u)
    space = ModeSpace(M, BOSE, cutoff=N)
    adu = sum(u[k] * ladder(space, k + 1, "create").matrix for k in range(M))
    psi = space.vacuum().astype(complex)
    for _ in range(N):
        psi = adu @ psi
    return space, psi / math.sqrt(math.factorial(N))


@pytest.mark.parametrize("N,n", [(1, 0), (1, 1), (2, 1), (2, 2), (3, 1), (3, 2)])
def test_product_state_expectation_matches_fock(N, n):
    from friedrichs.oracle import realize

    rng = np.random.default_rng(N * 10 + n)
    u = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    K = rng.standard_normal((2,) * (2 * n)) + 1j * rng.standard_normal((2,) * (2 * n))
    sym = KernelSymbol("K", n, n)
    space, psi = fock_product_state(u, N)
    direct = np.vdot(psi, realize(Expression.of(BOSE, sym), {"K": K}, space).matrix @ psi)
    assert abs(product_state_expectation(Term.of(sym), {"K": K}, u, N) - direct) < 1e-10


def test_product_state_number_operator_and_errors():
    u = np.array([0.6, 0.8j])
    assert abs(product_state_expectation(Term.of(A11), {"A": np.eye(2)}, u, 5) - 5) < 1e-12
    with pytest.raises(ValueError):
        product_state_expectation(Term.of(KernelSymbol("K", 2, 2)), {"K": np.zeros((2,) * 4)}, u, 1)


def test_series_limits(setup):
    T, V, A, u0 = setup
    zero = np.zeros((2,) * 4)
    v = expm_h(T, 0.4) @ u0
    res = acyclic_expectation_sum(A, T, zero, u0, 0.4, 3, 3)
    assert abs(res.value - 3 * np.vdot(v, A @ v)) < 1e-12
    assert all(abs(x) < 1e-14 for x in res.per_order[1:])
    res0 = acyclic_expectation_sum(A, T, V, u0, 0.0, 3, 2)
    assert abs(res0.value - 2 * np.vdot(u0, A @ u0)) < 1e-12


def test_interpolation_constant(setup):
    T, V, A, u0 = setup
    L = hartree_radius(V, u0)
    t = L / 2
    vals = [interpolation_value(A, T, V, u0, t, s, 6, 2) for s in (0.0, t / 2, t)]
    tail = acyclic_expectation_sum(A, T, V, u0, t, 6, 2).tail_bound
    assert max(abs(x - vals[0]) for x in vals) < tail


def test_hartree_identity_small(setup):
    T, V, A, u0 = setup
    r = compare_hartree(A, T, V, u0, hartree_radius(V, u0) / 2, 2, k_max=4)
    assert r.passed
    assert r.deviation < 1e-6


def test_norm_bound():
    assert norm_bound(0, 1, 1) == 1
    assert norm_bound(2, 1, 1) == 8
    assert norm_bound(3, 0.5, 2) == 192
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        assert norm_bound(400, 1e300, 1e10) == math.inf
    assert caught
    with pytest.raises(ValueError):
        norm_bound(-1, 1, 1)
