from fractions import Fraction

from hypothesis import given, strategies as st
import pytest

from friedrichs.coefficient import I, ONE, ZERO, Coefficient

rationals = st.fractions(max_denominator=50).filter(lambda f: abs(f) < 1000)
coeffs = st.builds(Coefficient, rationals, rationals)


def test_exact_arithmetic():
    half = Coefficient(Fraction(1, 2))
    assert half + half == ONE
    assert I * I == -ONE
    assert (ONE / 3) * 3 == ONE
    assert str(Coefficient(Fraction(-1, 2), 3)) in {"-1/2+3i", "(-1/2+3i)"}


def test_rejects_float():
    with pytest.raises(TypeError):
        Coefficient.coerce(0.5)


def test_pair_round_trip():
    c = Coefficient(Fraction(-7, 3), Fraction(2, 5))
    assert Coefficient.from_pair(c.to_pair()) == c


@given(coeffs, coeffs, coeffs)
def test_field_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert (a * b).conjugate() == a.conjugate() * b.conjugate()
    assert a - a == ZERO


@given(coeffs)
def test_complex_matches(a):
    z = complex(a)
    assert abs(z - complex(float(a.re), float(a.im))) < 1e-12
