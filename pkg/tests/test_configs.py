from math import comb, factorial

from hypothesis import given, strategies as st
import pytest

from friedrichs.configs import (
    ContractionConfig,
    config_count,
    config_sign,
    configs_for_arities,
    enumerate_configs,
    inversion_parity,
)
from friedrichs.oracle import reorder_oracle
from friedrichs.symbols import KernelSymbol


def brute_parity(seq):
    """Parity by literal adjacent swaps."""
    s = list(seq)
    swaps = 0
    for i in range(len(s)):
        for j in range(len(s) - 1 - i):
            if s[j] > s[j + 1]:
                s[j], s[j + 1] = s[j + 1], s[j]
                swaps += 1
    return -1 if swaps % 2 else 1


@pytest.mark.parametrize("m_A,n_B,expected", [(1, 1, 1), (2, 2, 6), (0, 3, 0), (3, 0, 0), (3, 3, 33)])
def test_known_counts(m_A, n_B, expected):
    assert config_count(m_A, n_B) == expected
    assert len(list(configs_for_arities(m_A, n_B))) == expected


def test_single_pairing():
    (cfg,) = configs_for_arities(1, 1)
    assert (cfg.C, cfg.pi, cfg.pi_prime) == (1, (1,), (1,))


def test_enumerate_from_monomials():
    A = KernelSymbol("A", 0, 2)
    B = KernelSymbol("B", 2, 0)
    assert len(enumerate_configs(A, B)) == 6
    assert enumerate_configs(KernelSymbol("A", 1, 0), B) == []


def test_order_is_lexicographic():
    keys = [(c.C, c.pi, c.pi_prime) for c in configs_for_arities(3, 3)]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)


@pytest.mark.parametrize(
    "pi,pp,sign",
    [((2,), (2,), -1), ((2,), (1,), 1), ((2, 1), (2, 1), 1)],
)
def test_worked_signs(pi, pp, sign):
    cfg = ContractionConfig(len(pi), pi, pp, 2, 2)
    assert config_sign(cfg, 2, 2) == sign


def test_three_swap_config_is_odd():
    # m_A = 4: contracting right slot 1 alone must move it past 3 slots
    cfg = ContractionConfig(1, (1,), (1,), 4, 1)
    assert cfg.sgn_sigma_prime == -1


def test_invalid_configs_rejected():
    with pytest.raises(ValueError):
        ContractionConfig(2, (1, 2), (1, 2), 2, 2)  # pi must decrease
    with pytest.raises(ValueError):
        ContractionConfig(1, (3,), (1,), 2, 2)
    with pytest.raises(ValueError):
        config_sign(ContractionConfig(1, (1,), (1,), 2, 2), 3, 2)


def test_overflow_reported():
    with pytest.raises(OverflowError):
        config_count(60, 60)


@given(st.integers(0, 6), st.integers(0, 6))
def test_count_matches_formula(m, n):
    formula = sum(factorial(c) * comb(n, c) * comb(m, c) for c in range(1, min(m, n) + 1))
    assert config_count(m, n) == formula == len(list(configs_for_arities(m, n)))


@given(st.lists(st.integers(0, 30), max_size=12))
def test_inversion_parity_matches_bubble_sort(seq):
    assert inversion_parity(seq) == brute_parity(seq)


def _delta_word_sign(m_A, n_B, cfg):
    """Sign of the δ-monomial from brute CAR rewriting of a_{y1..ym} a*_{x_n..x_1}."""
    from friedrichs.diagram import Diagram
    from friedrichs.expression import Term
    from friedrichs.symbols import annihilator, creator

    ys = [f"y{k}" for k in range(1, m_A + 1)]
    xs = [f"x{j}" for j in range(1, n_B + 1)]
    word = " ".join(ys) + " " + " ".join(f"{x}*" for x in reversed(xs))
    ref = reorder_oracle(word, "fermi")
    verts, lines = [], []
    for p, q in zip(cfg.pi, cfg.pi_prime):
        verts += [creator(xs[p - 1]), annihilator(ys[q - 1])]
        lines.append(((len(verts) - 2, 1), (len(verts) - 1, 1)))
    ext_left = []
    # surviving creators keep B's operator order a*_{x_high} … a*_{x_low}
    for j in [j for j in range(1, n_B + 1) if j not in cfg.pi]:
        verts.append(creator(xs[j - 1]))
        ext_left.append((len(verts) - 1, 1))
    ext_right = []
    for k in [k for k in range(1, m_A + 1) if k not in cfg.pi_prime]:
        verts.append(annihilator(ys[k - 1]))
        ext_right.append((len(verts) - 1, 1))
    term = Term(1, Diagram(tuple(verts), tuple(lines), tuple(ext_left), tuple(ext_right)))
    return ref.coefficient_of(term)


@pytest.mark.parametrize("m_A,n_B", [(1, 1), (1, 2), (2, 1), (2, 2), (2, 3), (3, 2), (3, 3)])
def test_signs_match_rewriting(m_A, n_B):
    """Config sign = coefficient of the matching δ-monomial in the rewritten word.

    A = a_{y1}…a_{ym} has annihilation slot k ↔ y_k and
    B = a*_{xn}…a*_{x1} has creation slot j ↔ x_j.
    """
    for cfg in configs_for_arities(m_A, n_B):
        got = _delta_word_sign(m_A, n_B, cfg)
        assert got == cfg.sign, (cfg, got)
