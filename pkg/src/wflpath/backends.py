"""Scalar arithmetic backends.

Every quantity in the solver (observations, weights, the regularization
parameter gamma, path coefficients) is an ordered-field scalar.  Two
interchangeable backends are provided:

* ``F64`` -- IEEE double precision.  Fast, inexact.
* ``RATIONAL`` -- arbitrary-precision ``fractions.Fraction``.  Every
  critical value of the path solves a linear equation with coefficients
  rational in the input, so rational inputs give an exactly representable
  path.

Algorithms stay backend-generic by doing plain ``+ - * /`` between stored
scalars and ints, and by asking the backend for anything else (ratios,
parsing, tolerance comparisons, guarded division).
"""

from __future__ import annotations

import math
from fractions import Fraction

__all__ = ["Backend", "FloatBackend", "RationalBackend", "F64", "RATIONAL",
           "get_backend"]

# Relative tolerance under which two float critical values are treated as
# the same event time.
FLOAT_TIE_RTOL = 1e-12

# Denominators smaller than this (relative to the slopes involved) are
# treated as parallel lines: no crossing.
FLOAT_PARALLEL_RTOL = 1e-15


class Backend:
    """Shared interface of the scalar backends."""

    name: str
    exact: bool

    def scalar(self, value):
        """Coerce an int, float, Fraction or 'p/q' string into this field."""
        raise NotImplementedError

    def ratio(self, p: int, q: int):
        """The field element p/q (q != 0)."""
        raise NotImplementedError

    def format(self, value) -> str:
        """Round-trippable text form of a scalar."""
        raise NotImplementedError

    def crossing(self, numer, denom):
        """numer/denom, or None when denom is (numerically) zero.

        Used for intersection times of two lines whose slope difference is
        ``denom``; a None means the lines are treated as parallel.
        """
        raise NotImplementedError

    def same_gamma(self, a, b) -> bool:
        """Whether two critical values count as the same event time."""
        raise NotImplementedError

    def parse(self, text: str):
        text = text.strip()
        if "/" in text:
            num, den = text.split("/")
            return self.scalar(Fraction(int(num), int(den)))
        return self.scalar(Fraction(text))

    def to_float(self, value) -> float:
        return float(value)


class FloatBackend(Backend):
    name = "f64"
    exact = False

    def scalar(self, value):
        if isinstance(value, str):
            return self.parse(value)
        return float(value)

    def ratio(self, p, q):
        return p / q

    def format(self, value):
        return repr(float(value))

    def crossing(self, numer, denom):
        if abs(denom) <= FLOAT_PARALLEL_RTOL * max(abs(numer), abs(denom)):
            return None
        if denom == 0.0:
            return None
        return numer / denom

    def same_gamma(self, a, b):
        return abs(a - b) <= FLOAT_TIE_RTOL * max(abs(a), abs(b))


class RationalBackend(Backend):
    name = "rational"
    exact = True

    def scalar(self, value):
        if isinstance(value, str):
            return self.parse(value)
        if isinstance(value, float):
            # exact binary value of the float, not a decimal reparse
            return Fraction(value)
        return Fraction(value)

    def ratio(self, p, q):
        return Fraction(p, q)

    def format(self, value):
        value = Fraction(value)
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"

    def crossing(self, numer, denom):
        if denom == 0:
            return None
        return Fraction(numer, 1) / denom

    def same_gamma(self, a, b):
        return a == b


F64 = FloatBackend()
RATIONAL = RationalBackend()

_BY_NAME = {F64.name: F64, RATIONAL.name: RATIONAL}


def get_backend(name: str) -> Backend:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; expected one of {sorted(_BY_NAME)}")


def infer_backend(values) -> Backend:
    """RATIONAL if any value is a Fraction, else F64."""
    for v in values:
        if isinstance(v, Fraction):
            return RATIONAL
    return F64


INF = math.inf
