"""Exact Gaussian-rational coefficients."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
import re

__all__ = ["Coefficient", "ZERO", "ONE", "I"]

_LITERAL = re.compile(r"^\s*([+-]?\d+(?:/\d+)?)\s*$")


def _frac(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        if not _LITERAL.match(value):
            raise ValueError(f"not an exact rational literal: {value!r}")
        return Fraction(value.strip())
    raise TypeError(f"cannot use {type(value).__name__} as an exact coefficient")


class Coefficient:
    """A complex number re + i·im with exact rational parts.

    Floats are refused on purpose; the symbolic core never rounds.
    """

    __slots__ = ("re", "im", "_hash")

    def __init__(self, re=0, im=0):
        self.re = _frac(re)
        self.im = _frac(im)
        self._hash = None

    @classmethod
    def _make(cls, re_: Fraction, im_: Fraction) -> "Coefficient":
        obj = object.__new__(cls)
        obj.re, obj.im, obj._hash = re_, im_, None
        return obj

    @classmethod
    def coerce(cls, value) -> "Coefficient":
        if isinstance(value, Coefficient):
            return value
        if isinstance(value, complex):
            raise TypeError("complex floats are not exact; pass Coefficient(re, im)")
        return cls(value)

    def is_zero(self) -> bool:
        return not self.re and not self.im

    def conjugate(self) -> "Coefficient":
        return Coefficient._make(self.re, -self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __add__(self, other):
        o = _maybe(other)
        if o is None:
            return NotImplemented
        return Coefficient._make(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = _maybe(other)
        if o is None:
            return NotImplemented
        return Coefficient._make(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = _maybe(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return Coefficient._make(-self.re, -self.im)

    def __mul__(self, other):
        o = _maybe(other)
        if o is None:
            return NotImplemented
        return Coefficient._make(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _maybe(other)
        if o is None:
            return NotImplemented
        den = o.re * o.re + o.im * o.im
        if not den:
            raise ZeroDivisionError("coefficient division by zero")
        num = self * o.conjugate()
        return Coefficient._make(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        o = _maybe(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return ONE / (self ** -k)
        out, base = ONE, self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        o = _maybe(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.re, self.im))
        return self._hash

    def __bool__(self):
        return not self.is_zero()

    def to_pair(self) -> tuple[str, str]:
        return str(self.re), str(self.im)

    @classmethod
    def from_pair(cls, pair) -> "Coefficient":
        re_, im_ = pair
        return cls(_frac(str(re_)), _frac(str(im_)))

    def __repr__(self):
        return f"Coefficient({self})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return "i" if self.im == 1 else "-i" if self.im == -1 else f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        mag = abs(self.im)
        return f"({self.re}{sign}{'' if mag == 1 else mag}i)"


def _maybe(value):
    if isinstance(value, Coefficient):
        return value
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return Coefficient._make(Fraction(value), Fraction(0))
    return None


ZERO = Coefficient(0)
ONE = Coefficient(1)
I = Coefficient(0, 1)
