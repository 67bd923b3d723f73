"""Mean-field dynamics: Duhamel expansion in diagrams and the tree-diagram series.

Symbolic part
    :func:`duhamel_buckets` expands (1/i)^k [[…[A, ½V^{(t_1)}]…], ½V^{(t_k)}]
    and groups terms by external leg count ℓ. The ℓ = k+1 bucket is exactly
    the tree (acyclic) part, reachable directly by the single-contraction
    recursion :func:`star_bracket`.

Numeric part
    A one-body A evolves under the Hartree flow i u̇ = (T + V_u)u. Its
    product-state expectation equals the sum over k of the tree kernels
    K_k(t) = ∫_{0≤t_1≤…≤t_k≤t} A_{k,k+1}, evaluated classically on
    e^{-itT}u_0. The kernels are built by the same single-contraction
    recursion on dense tensors, with nested Gauss-Legendre quadrature in
    time, worked in the eigenbasis of T where V^{(t)} is a phase.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import math
from typing import Optional
import warnings

import numpy as np

from .algebra import _attached_terms, commute
from .coefficient import Coefficient, I
from .diagram import is_acyclic
from .expression import Expression, Term, as_term, canonicalize
from .oracle.fock import NumericKernel, diagram_tensor
from .symbols import KernelSymbol, Statistics

__all__ = [
    "OneBodyOperator",
    "TwoBodyPotential",
    "HartreeState",
    "SeriesBucket",
    "SeriesResult",
    "BudgetExceeded",
    "RadiusError",
    "potential_symbol",
    "interaction_potential",
    "mean_field",
    "hartree_radius",
    "hartree_evolve",
    "star_bracket",
    "tree_terms",
    "duhamel_buckets",
    "acyclicity_report",
    "product_state_expectation",
    "classical_value",
    "star_bracket_tensor",
    "tree_kernels",
    "acyclic_expectation_sum",
    "interpolation_value",
    "HartreeComparison",
    "hartree_expectation",
    "compare_hartree",
    "norm_bound",
    "random_hermitian",
    "random_potential",
]

BOSE = Statistics.BOSE
HALF = Coefficient(Fraction(1, 2))
MINUS_I = -I  # 1/i


class BudgetExceeded(RuntimeError):
    def __init__(self, message: str, partial=None, order: int | None = None):
        super().__init__(message)
        self.partial = partial
        self.order = order


class RadiusError(ValueError):
    """|t| is outside the convergence radius of the series."""


# --- types ----------------------------------------------------------------


@dataclass(frozen=True)
class OneBodyOperator:
    T: np.ndarray

    def __post_init__(self):
        T = np.asarray(self.T, dtype=complex)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ValueError("T must be a square matrix")
        if not np.allclose(T, T.conj().T, atol=1e-12, rtol=0):
            raise ValueError("T is not Hermitian to 1e-12")
        object.__setattr__(self, "T", T)


@dataclass(frozen=True)
class TwoBodyPotential:
    """V(x, x', y, y') = ⟨x x'|V|y y'⟩."""

    V: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.V, dtype=complex)
        if V.ndim != 4 or len(set(V.shape)) != 1:
            raise ValueError("V must have shape (M, M, M, M)")
        M = V.shape[0]
        mat = V.reshape(M * M, M * M)
        if not np.allclose(mat, mat.conj().T, atol=1e-12, rtol=0):
            raise ValueError("V is not self-adjoint on the two-particle space")
        if not np.allclose(V, V.transpose(1, 0, 3, 2), atol=1e-12, rtol=0):
            raise ValueError("V is not symmetric under the coordinate swap")
        object.__setattr__(self, "V", V)

    @property
    def norm(self) -> float:
        M = self.V.shape[0]
        return float(np.linalg.norm(self.V.reshape(M * M, M * M), 2))


@dataclass(frozen=True)
class HartreeState:
    u: np.ndarray
    t: float
    norm0: float
    norm_drift: float = 0.0


@dataclass(frozen=True)
class SeriesBucket:
    k: int
    ell: int
    terms: Expression


@dataclass(frozen=True)
class SeriesResult:
    value: complex
    tail_bound: float
    per_order: tuple[complex, ...]
    prefactor: float
    q: float = field(default=0.0)


def _T(T) -> np.ndarray:
    return T.T if isinstance(T, OneBodyOperator) else OneBodyOperator(T).T


def _V(V) -> TwoBodyPotential:
    return V if isinstance(V, TwoBodyPotential) else TwoBodyPotential(V)


# --- one-particle numerics -------------------------------------------------


def interaction_potential(T, V, t: float) -> NumericKernel:
    """V^{(t)} = e^{-it(T_1+T_2)} V e^{it(T_1+T_2)}."""
    T = _T(T)
    V = _V(V).V
    w, Q = np.linalg.eigh(T)
    E = (Q * np.exp(-1j * t * w)) @ Q.conj().T
    Vt = np.einsum("ai,bj,ijkl,kc,ld->abcd", E, E, V, E.conj().T, E.conj().T, optimize=True)
    return NumericKernel(f"V^({t})", Vt)


def mean_field(V, u) -> np.ndarray:
    """V_u(x, y) = Σ V(x, x', y, y') ū(x') u(y')."""
    V = np.asarray(V.V if isinstance(V, TwoBodyPotential) else V, dtype=complex)
    u = np.asarray(u, dtype=complex)
    if V.shape != (len(u),) * 4:
        raise ValueError(f"V shape {V.shape} does not match u of length {len(u)}")
    return np.einsum("abcd,b,d->ac", V, u.conj(), u)


def hartree_radius(V, u0) -> float:
    """L = 1 / (2‖V‖‖u_0‖²)."""
    nv = _V(V).norm
    nu = float(np.vdot(u0, u0).real)
    if nv == 0 or nu == 0:
        return math.inf
    return 1.0 / (2 * nv * nu)


def hartree_evolve(T, V, u0, t: float, dt: float = 1e-3) -> HartreeState:
    """Fixed-step RK4 for i u̇ = (T + V_u) u."""
    T = _T(T)
    Vp = _V(V)
    u = np.asarray(u0, dtype=complex).copy()
    L = hartree_radius(Vp, u)
    if abs(t) >= L:
        raise RadiusError(f"|t| = {abs(t)} is not below the radius L = 1/(2‖V‖‖u0‖²) = {L}")
    norm0 = float(np.linalg.norm(u))
    steps = max(1, math.ceil(abs(t) / dt))
    h = t / steps
    Vt = Vp.V

    def f(v):
        return -1j * (T @ v + mean_field(Vt, v) @ v)

    for _ in range(steps):
        k1 = f(u)
        k2 = f(u + 0.5 * h * k1)
        k3 = f(u + 0.5 * h * k2)
        k4 = f(u + h * k3)
        u = u + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return HartreeState(u, t, norm0, abs(float(np.linalg.norm(u)) - norm0))


def random_hermitian(M: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    X = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    H = (X + X.conj().T) / 2
    return scale * H / np.linalg.norm(H, 2)


def random_potential(M: int, rng: np.random.Generator, norm: float = 1.0) -> np.ndarray:
    """Self-adjoint, swap-symmetric V with operator norm ``norm``."""
    H = random_hermitian(M * M, rng)
    P = np.eye(M * M).reshape(M, M, M, M).transpose(1, 0, 2, 3).reshape(M * M, M * M)
    S = (H + P @ H @ P) / 2
    S = norm * S / np.linalg.norm(S, 2)
    return S.reshape(M, M, M, M)


# --- symbolic expansion ----------------------------------------------------


def potential_symbol(j: int) -> KernelSymbol:
    return KernelSymbol(f"V^(t{j})", 2, 2)


def star_bracket(A, B) -> Expression:
    """{A, B}_*: the single-contraction part of A∨B − B∨A (bosons only)."""
    if isinstance(A, Expression) or isinstance(B, Expression):
        ea = A if isinstance(A, Expression) else Expression(BOSE, [as_term(A)])
        eb = B if isinstance(B, Expression) else Expression(BOSE, [as_term(B)])
        if ea.statistics is not BOSE or eb.statistics is not BOSE:
            raise ValueError("star bracket is defined for bosons only")
        out: list[Term] = []
        for a in ea.terms:
            for b in eb.terms:
                out += _attached_terms(a, b, False, single=True)
                out += [Term(-t.coeff, t.diagram) for t in _attached_terms(b, a, False, single=True)]
        return canonicalize(Expression(BOSE, out))
    return star_bracket(Expression(BOSE, [as_term(A)]), Expression(BOSE, [as_term(B)]))


def tree_terms(A, k: int, budget: int = 200_000) -> Expression:
    """A_{k,k+1} by the recursion A_{k,k+1} = (1/2i){A_{k-1,k}, V^{(t_k)}}_*."""
    X = Expression.of(BOSE, as_term(A))
    for j in range(1, k + 1):
        if len(X) * 4 * (j + 1) > budget:
            raise BudgetExceeded(f"tree expansion at order {j} exceeds {budget} terms", X, j - 1)
        X = star_bracket(X, Term.of(potential_symbol(j))).scale(HALF * MINUS_I)
    return X


def duhamel_buckets(A, k_max: int, budget: int = 200_000) -> list[SeriesBucket]:
    """Order-k nested commutators bucketed by leg count, k = 0..k_max."""
    A = as_term(A)
    if A.n != A.m:
        raise ValueError("duhamel_buckets needs a number-conserving A (n = m)")
    X = Expression.of(BOSE, A)
    out = []
    for k in range(0, k_max + 1):
        if k:
            # the next commutator produces at most ~ (configs of A∨V + V∨A) terms per term
            est = sum(4 * max(t.n, 1) + 2 * max(t.n, 1) ** 2 for t in X.terms)
            if est > budget:
                raise BudgetExceeded(f"order {k} would exceed the term budget {budget}", out, k - 1)
            V = Expression.of(BOSE, Term.of(potential_symbol(k), HALF))
            X = commute(X, V).scale(MINUS_I)
        top = A.n + k
        by_ell: dict[int, list[Term]] = {ell: [] for ell in range(1 if k else A.n, top + 1)}
        for t in X.terms:
            n, m = t.diagram.legs
            if n != m:
                raise AssertionError("number conservation violated")  # pragma: no cover
            by_ell.setdefault(n, []).append(t)
        for ell in sorted(by_ell):
            out.append(SeriesBucket(k, ell, canonicalize(Expression(BOSE, by_ell[ell]))))
    return out


def acyclicity_report(buckets: list[SeriesBucket]) -> dict[tuple[int, int], tuple[int, int]]:
    """(k, ℓ) → (acyclic count, cyclic count)."""
    out = {}
    for b in buckets:
        acyc = sum(1 for t in b.terms.terms if is_acyclic(t.diagram))
        out[(b.k, b.ell)] = (acyc, len(b.terms) - acyc)
    return out


# --- expectations -------------------------------------------------------------


def classical_value(K: np.ndarray, v: np.ndarray, n_left: Optional[int] = None) -> complex:
    """Σ K(X, Y) Π v̄(x) Π v(y); the first ``n_left`` axes are creation slots."""
    K = np.asarray(K)
    n = K.ndim // 2 if n_left is None else n_left
    out = K
    vc = np.conj(v)
    for _ in range(n):
        out = np.tensordot(vc, out, axes=(0, 0))
    for _ in range(K.ndim - n):
        out = np.tensordot(v, out, axes=(0, 0))
    return complex(out)


def product_state_expectation(d, kernels, u, N: int, labels=None) -> complex:
    """⟨u^{⊗N}, B u^{⊗N}⟩ for a number-conserving diagram or term B.

    Equals N(N−1)…(N−ℓ+1) · ‖u‖^{2(N−ℓ)} · Σ f_B Π ū Π u.
    """
    t = as_term(d) if not isinstance(d, NumericKernel) else None
    if t is not None:
        n, m = t.diagram.legs
        u = np.asarray(u, dtype=complex)
        K = complex(t.coeff) * diagram_tensor(t.diagram, kernels, len(u), labels or {})
    else:
        K = np.asarray(d.tensor)
        n = m = K.ndim // 2
    if n != m:
        raise ValueError("product-state expectation needs equal left/right leg counts")
    if n > N:
        raise ValueError(f"diagram has ℓ = {n} legs but the state has only N = {N} particles")
    ff = math.perm(N, n)
    norm2 = float(np.vdot(u, u).real)
    return ff * norm2 ** (N - n) * classical_value(K, u, n)


def _star_subscripts(ell: int):
    letters = "abcdefghijklmnopqrstuvwxyz"
    L = list(letters[:ell])
    R = list(letters[ell : 2 * ell])
    z, p, q, s = "ZPQS"
    specs = []
    # K ∨ V: V's left slot j meets K's right slot k
    for j in (0, 1):
        for k in range(ell):
            Kr = R.copy()
            Kr[k] = z
            vl = [p, p]
            vl[j] = z
            out_l = [p] + L
            out_r = [R[i] for i in range(ell) if i != k] + [q, s]
            specs.append((1, f"...{''.join(L + Kr)},...{''.join(vl + [q, s])}->...{''.join(out_l + out_r)}"))
    # V ∨ K: K's left slot j meets V's right slot k
    for j in range(ell):
        for k in (0, 1):
            Kl = L.copy()
            Kl[j] = z
            vr = [p, p]
            vr[k] = z
            out_l = [L[i] for i in range(ell) if i != j] + [q, s]
            out_r = [p] + R
            specs.append((-1, f"...{''.join(Kl + R)},...{''.join([q, s] + vr)}->...{''.join(out_l + out_r)}"))
    return specs


def star_bracket_tensor(K: np.ndarray, V: np.ndarray, ell: int) -> np.ndarray:
    """{K, V}_* on dense kernels with optional leading batch axes.

    Leg order matches the symbolic attached product before canonicalization.
    """
    out = 0
    for sign, spec in _star_subscripts(ell):
        part = np.einsum(spec, K, V)
        out = out + part if sign > 0 else out - part
    return out


def _eig_frame(T, V, A, u0):
    T = _T(T)
    w, Q = np.linalg.eigh(T)
    Qh = Q.conj().T
    Vp = np.einsum("ai,bj,ijkl,kc,ld->abcd", Qh, Qh, _V(V).V, Q, Q, optimize=True)
    Ap = Qh @ np.asarray(A, dtype=complex) @ Q
    up = Qh @ np.asarray(u0, dtype=complex)
    return w, Vp, Ap, up, Q


def tree_kernels(A, T, V, t: float, k_max: int, nodes: int = 8, frame=None) -> list[np.ndarray]:
    """K_k(t) = ∫_{0≤t_1≤…≤t_k≤t} A_{k,k+1} for k = 0..k_max, in T's eigenbasis."""
    w, Vp, Ap, _, _ = frame or _eig_frame(T, V, A, np.zeros(len(A)))
    xi, wi = np.polynomial.legendre.leggauss(nodes)
    phase_exp = w[:, None, None, None] + w[None, :, None, None] - w[None, None, :, None] - w[None, None, None, :]

    def V_at(times: np.ndarray) -> np.ndarray:
        return np.exp(-1j * times[:, None, None, None, None] * phase_exp) * Vp

    def K(level: int, s: np.ndarray) -> np.ndarray:
        if level == 0:
            return np.broadcast_to(Ap, (len(s),) + Ap.shape)
        r = s[:, None] * (1 + xi[None, :]) / 2
        wt = s[:, None] * wi[None, :] / 2
        prev = K(level - 1, r.ravel())
        br = star_bracket_tensor(prev, V_at(r.ravel()), level) / 2j
        br = br.reshape((len(s), nodes) + br.shape[1:])
        return np.einsum("bn,bn...->b...", wt, br)

    return [K(k, np.array([float(t)]))[0] for k in range(k_max + 1)]


def norm_bound(k: int, normA: float, normV: float) -> float:
    """k!·‖A‖·(2‖V‖)^k; overflow gives +inf with an OverflowWarning."""
    if k < 0 or normA < 0 or normV < 0:
        raise ValueError("norm_bound needs nonnegative inputs")
    try:
        val = math.factorial(k) * normA * (2 * normV) ** k
        if math.isinf(val):
            raise OverflowError
        return float(val)
    except OverflowError:
        warnings.warn(f"norm_bound overflowed at k={k}", RuntimeWarning, stacklevel=2)
        return math.inf


def _series_check(A, T, V, u0, t, k_max):
    A = np.asarray(A, dtype=complex)
    Vp = _V(V)
    u0 = np.asarray(u0, dtype=complex)
    L = hartree_radius(Vp, u0)
    if abs(t) >= L:
        raise RadiusError(f"|t| = {abs(t)} is not below the radius L = {L}")
    nu2 = float(np.vdot(u0, u0).real)
    q = 2 * abs(t) * Vp.norm * nu2
    if q >= 1:
        raise RadiusError(f"tail does not converge: 2|t|‖V‖‖u0‖² = {q} ≥ 1")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    return A, Vp, u0, nu2, q


def acyclic_expectation_sum(
    A, T, V, u0, t: float, k_max: int, N: int, nodes: int = 8
) -> SeriesResult:
    """Tree-diagram series for ⟨dΓ(A)⟩ in the evolved N-fold product state.

    Each A_{k,k+1} is evaluated as Σ K Π v̄ Π v at v = e^{-itT}u_0 and the
    whole series carries the one-body prefactor N‖u_0‖^{2(N−1)}.
    """
    A, Vp, u0, nu2, q = _series_check(A, T, V, u0, t, k_max)
    frame = _eig_frame(T, Vp, A, u0)
    w, _, _, up, _ = frame
    v = np.exp(-1j * t * w) * up
    Ks = tree_kernels(A, T, Vp, t, k_max, nodes, frame)
    c = N * nu2 ** (N - 1)
    per = tuple(c * classical_value(K, v) for K in Ks)
    tail = c * float(np.linalg.norm(A, 2)) * nu2 * q ** (k_max + 1) / (1 - q)
    return SeriesResult(sum(per), tail, per, c, q)


def interpolation_value(
    A, T, V, u0, t: float, s: float, k_max: int, N: int, nodes: int = 8, dt: float = 1e-3
) -> complex:
    """Σ_k ∫_{simplex [0, t−s]} ⟨A_{k,k+1}⟩ at v_s = e^{i(s−t)T} u_s; constant in s."""
    A, Vp, u0, nu2, q = _series_check(A, T, V, u0, t, k_max)
    us = hartree_evolve(T, Vp, u0, s, dt).u if s else u0
    frame = _eig_frame(T, Vp, A, us)
    w, _, _, up, _ = frame
    v = np.exp(1j * (s - t) * w) * up
    Ks = tree_kernels(A, T, Vp, t - s, k_max, nodes, frame)
    c = N * nu2 ** (N - 1)
    return c * sum(classical_value(K, v) for K in Ks)


def hartree_expectation(A, T, V, u0, t: float, N: int, dt: float = 1e-3) -> complex:
    """N‖u0‖^{2(N−1)}⟨u_t, A u_t⟩ with u_t from the RK4 Hartree flow."""
    u0 = np.asarray(u0, dtype=complex)
    ut = hartree_evolve(T, V, u0, t, dt).u
    nu2 = float(np.vdot(u0, u0).real)
    return N * nu2 ** (N - 1) * complex(np.vdot(ut, np.asarray(A, dtype=complex) @ ut))


@dataclass(frozen=True)
class HartreeComparison:
    lhs: complex
    rhs: complex
    tail_bound: float
    rel_tol: float
    N: int
    t: float
    k_max: int
    radius: float
    per_order: tuple[complex, ...]

    @property
    def deviation(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def allowed(self) -> float:
        return self.tail_bound + self.rel_tol * abs(self.lhs)

    @property
    def passed(self) -> bool:
        return self.deviation <= self.allowed

    def to_data(self) -> dict:
        c = lambda z: [float(z.real), float(z.imag)]  # noqa: E731
        return {
            "N": self.N,
            "t": self.t,
            "k_max": self.k_max,
            "radius": self.radius,
            "lhs": c(self.lhs),
            "rhs": c(self.rhs),
            "per_order": [c(z) for z in self.per_order],
            "deviation": self.deviation,
            "tail_bound": self.tail_bound,
            "allowed": self.allowed,
            "passed": self.passed,
        }


def compare_hartree(
    A, T, V, u0, t: float, N: int, k_max: int = 6, nodes: int = 8, dt: float = 1e-3, rel_tol: float = 1e-4
) -> HartreeComparison:
    """Both sides of the mean-field identity: RK4 flow vs acyclic diagram sum."""
    series = acyclic_expectation_sum(A, T, V, u0, t, k_max, N, nodes)
    lhs = hartree_expectation(A, T, V, u0, t, N, dt)
    return HartreeComparison(
        lhs, series.value, series.tail_bound, rel_tol, N, t, k_max, hartree_radius(V, u0), series.per_order
    )
