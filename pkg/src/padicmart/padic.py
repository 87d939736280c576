"""Exact p-adic numbers at a fixed working precision, and their magnitudes.

A nonzero number is stored as ``p**v * u`` with ``u`` a unit mantissa known
modulo ``p**N``.  Zero is exact and carries no precision.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import total_ordering
from typing import Union


class PadicError(ArithmeticError):
    pass


class PrecisionUnderflow(PadicError):
    """Cancellation consumed every known digit; raise the working precision."""


class IndistinguishableAtPrecision(PrecisionUnderflow):
    pass


class DivisionByZero(PadicError, ZeroDivisionError):
    pass


class ZeroDenominator(PadicError, ZeroDivisionError):
    pass


class PrimeMismatch(PadicError, ValueError):
    pass


def valuation(n: Union[int, Fraction], p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    n = Fraction(n)
    if n == 0:
        raise ValueError("valuation of zero is infinite")
    num, den = n.numerator, n.denominator
    v = 0
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


@total_ordering
@dataclass(frozen=True)
class Magnitude:
    """An exact absolute value: zero, or ``p**(-exponent)``."""

    exponent: int | None  # None means the magnitude is zero

    @classmethod
    def zero(cls) -> "Magnitude":
        return cls(None)

    @property
    def is_zero(self) -> bool:
        return self.exponent is None

    def _rank(self) -> float:
        # increasing in the magnitude; zero sits below every p**-e
        return float("-inf") if self.exponent is None else -self.exponent

    def __lt__(self, other: "Magnitude") -> bool:
        if not isinstance(other, Magnitude):
            return NotImplemented
        return self._rank() < other._rank()

    def __gt__(self, other: "Magnitude") -> bool:
        if not isinstance(other, Magnitude):
            return NotImplemented
        return self._rank() > other._rank()

    def __mul__(self, other: "Magnitude") -> "Magnitude":
        if not isinstance(other, Magnitude):
            return NotImplemented
        if self.is_zero or other.is_zero:
            return Magnitude.zero()
        return Magnitude(self.exponent + other.exponent)

    def __or__(self, other: "Magnitude") -> "Magnitude":
        # join, as in the ultrametric bound
        return max(self, other)

    def to_fraction(self, p: int) -> Fraction:
        if self.is_zero:
            return Fraction(0)
        return Fraction(p) ** (-self.exponent)

    def to_float(self, p: int) -> float:
        return 0.0 if self.is_zero else float(p) ** (-self.exponent)

    def __str__(self) -> str:
        return "0" if self.is_zero else f"p^{-self.exponent}"

    @classmethod
    def parse(cls, text: str) -> "Magnitude":
        text = text.strip()
        if text == "0":
            return cls.zero()
        m = re.fullmatch(r"p\^(-?\d+)", text)
        if not m:
            raise ValueError(f"bad magnitude literal {text!r}")
        return cls(-int(m.group(1)))


@dataclass(frozen=True, eq=False)
class PadicNumber:
    """Element of Q_p known to ``precision`` significant base-p digits."""

    prime: int
    valuation: int
    mantissa: int
    precision: int
    is_zero: bool = field(default=False)

    def __post_init__(self):
        if self.prime < 2:
            raise ValueError(f"prime must be >= 2, got {self.prime}")
        if self.precision < 1:
            raise ValueError("precision must be positive")
        if not self.is_zero:
            if self.mantissa % self.prime == 0:
                raise ValueError("mantissa must be a p-adic unit")
            if not 1 <= self.mantissa < self.prime ** self.precision:
                raise ValueError("mantissa out of range for precision")

    # construction ---------------------------------------------------------

    @classmethod
    def zero(cls, p: int, N: int) -> "PadicNumber":
        return cls(p, 0, 0, N, True)

    @classmethod
    def from_rational(cls, a: Union[int, Fraction], b: int = 1, p: int = 2,
                      N: int = 12) -> "PadicNumber":
        if b == 0:
            raise ZeroDenominator("denominator is zero")
        r = Fraction(a) / b
        if r == 0:
            return cls.zero(p, N)
        return cls._from_nonzero(r, p, N)

    @classmethod
    def _from_nonzero(cls, r: Fraction, p: int, N: int) -> "PadicNumber":
        v = valuation(r, p)
        unit = r / Fraction(p) ** v
        mod = p ** N
        u = unit.numerator * pow(unit.denominator, -1, mod) % mod
        return cls(p, v, u, N)

    # views ----------------------------------------------------------------

    @property
    def absolute_precision(self) -> float | int:
        """Position of the first unknown digit (infinite for exact zero)."""
        return float("inf") if self.is_zero else self.valuation + self.precision

    def to_fraction(self) -> Fraction:
        """The representative ``p**v * u`` as an exact rational."""
        if self.is_zero:
            return Fraction(0)
        if self.valuation >= 0:
            return Fraction(self.mantissa * self.prime ** self.valuation)
        return Fraction(self.mantissa, self.prime ** -self.valuation)

    def digits(self) -> list[int]:
        """Base-p digits of the mantissa, least significant first."""
        out, u = [], self.mantissa
        for _ in range(0 if self.is_zero else self.precision):
            u, d = divmod(u, self.prime)
            out.append(d)
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, PadicNumber):
            return NotImplemented
        if self.is_zero or other.is_zero:
            return self.is_zero and other.is_zero and self.prime == other.prime
        return (self.prime, self.valuation, self.mantissa, self.precision) == (
            other.prime, other.valuation, other.mantissa, other.precision)

    def __hash__(self) -> int:
        if self.is_zero:
            return hash((self.prime, "zero"))
        return hash((self.prime, self.valuation, self.mantissa, self.precision))

    def __repr__(self) -> str:
        if self.is_zero:
            return f"PadicNumber(0, p={self.prime})"
        return (f"PadicNumber({self.prime}^{self.valuation}*{self.mantissa}, "
                f"N={self.precision})")

    def __str__(self) -> str:
        return format_padic(self)

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        return add(self, _coerce(other, self))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _coerce(other, self))

    def __rsub__(self, other):
        return sub(_coerce(other, self), self)

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        return mul(self, _coerce(other, self))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, _coerce(other, self))

    def __rtruediv__(self, other):
        return div(_coerce(other, self), self)

    def __abs__(self) -> Magnitude:
        return abs_(self)


def _coerce(value, like: PadicNumber) -> PadicNumber:
    if isinstance(value, PadicNumber):
        return value
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return PadicNumber.from_rational(value, 1, like.prime, like.precision)
    return NotImplemented


def _check_prime(x: PadicNumber, y: PadicNumber) -> None:
    if x.prime != y.prime:
        raise PrimeMismatch(f"cannot combine Q_{x.prime} with Q_{y.prime}")


def from_rational(a: int, b: int, p: int, N: int) -> PadicNumber:
    return PadicNumber.from_rational(a, b, p, N)


def neg(x: PadicNumber) -> PadicNumber:
    if x.is_zero:
        return x
    mod = x.prime ** x.precision
    return PadicNumber(x.prime, x.valuation, (mod - x.mantissa) % mod, x.precision)


def add(x: PadicNumber, y: PadicNumber) -> PadicNumber:
    """Sum at the absolute precision both operands support.

    Leading cancellation shortens the result's relative precision.  A sum that
    vanishes at that precision is an exact zero only when ``y`` is literally
    ``-x``; otherwise PrecisionUnderflow is raised.
    """
    _check_prime(x, y)
    if x.is_zero:
        return y
    if y.is_zero:
        return x
    p = x.prime
    known = min(x.absolute_precision, y.absolute_precision)
    m = min(x.valuation, y.valuation)
    # integer arithmetic: s = p**m * t
    t = x.mantissa * p ** (x.valuation - m) + y.mantissa * p ** (y.valuation - m)
    room = known - m
    if t % p ** room == 0:
        if (x.valuation == y.valuation and x.precision == y.precision
                and (x.mantissa + y.mantissa) % p ** x.precision == 0):
            return PadicNumber.zero(p, x.precision)
        raise PrecisionUnderflow(
            f"sum of {x!r} and {y!r} cancels below digit {known}")
    w = 0
    while t % p == 0:
        t //= p
        w += 1
    N = room - w
    return PadicNumber(p, m + w, t % p ** N, N)


def sub(x: PadicNumber, y: PadicNumber) -> PadicNumber:
    return add(x, neg(y))


def mul(x: PadicNumber, y: PadicNumber) -> PadicNumber:
    _check_prime(x, y)
    N = min(x.precision, y.precision)
    if x.is_zero or y.is_zero:
        return PadicNumber.zero(x.prime, N)
    mod = x.prime ** N
    return PadicNumber(x.prime, x.valuation + y.valuation,
                       x.mantissa * y.mantissa % mod, N)


def inv(x: PadicNumber) -> PadicNumber:
    if x.is_zero:
        raise DivisionByZero("zero has no inverse")
    mod = x.prime ** x.precision
    return PadicNumber(x.prime, -x.valuation, pow(x.mantissa, -1, mod), x.precision)


def div(x: PadicNumber, y: PadicNumber) -> PadicNumber:
    return mul(x, inv(y))


def abs_(x: PadicNumber) -> Magnitude:
    return Magnitude.zero() if x.is_zero else Magnitude(x.valuation)


def dist(x: PadicNumber, y: PadicNumber) -> Magnitude:
    _check_prime(x, y)
    if x == y:
        return Magnitude.zero()
    try:
        return abs_(sub(x, y))
    except PrecisionUnderflow as exc:
        raise IndistinguishableAtPrecision(str(exc)) from None


def agree_to(x: PadicNumber, y: PadicNumber, k: int) -> bool:
    """Whether ``|x - y| <= p**-k``.

    Raises IndistinguishableAtPrecision when the known digits cannot decide.
    """
    _check_prime(x, y)
    known = min(x.absolute_precision, y.absolute_precision)
    d = x.to_fraction() - y.to_fraction()
    if d != 0:
        vd = valuation(d, x.prime)
        if vd < known:
            return vd >= k
    if known >= k or x == y:
        return True
    raise IndistinguishableAtPrecision(
        f"{x!r} and {y!r} agree on all known digits, need digit {k}")


# literals -------------------------------------------------------------------

_EXPLICIT = re.compile(r"\s*(-)?\s*(p|\d+)\s*\^\s*(-?\d+)\s*\*\s*(\d+)\s*")


def parse_padic(text, p: int, N: int) -> PadicNumber:
    """Parse ``"a/b"``, ``"a"`` or the explicit form ``"p^v*u"``.

    In the explicit form the base may be written as the letter ``p`` or as
    the prime itself.
    """
    if isinstance(text, bool) or isinstance(text, float):
        raise TypeError(f"p-adic literals must be exact, got {text!r}")
    if isinstance(text, (int, Fraction)):
        return PadicNumber.from_rational(text, 1, p, N)
    if not isinstance(text, str):
        raise TypeError(f"cannot parse {text!r} as a p-adic literal")
    m = _EXPLICIT.fullmatch(text)
    if m:
        sign, base, v, u = m.groups()
        if base != "p" and int(base) != p:
            raise ValueError(f"literal {text!r} is not in Q_{p}")
        r = Fraction(p) ** int(v) * int(u)
        return PadicNumber.from_rational(-r if sign else r, 1, p, N)
    try:
        r = Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad p-adic literal {text!r}") from exc
    if "." in text or "e" in text.lower():
        raise ValueError(f"p-adic literals must be exact rationals, got {text!r}")
    return PadicNumber.from_rational(r, 1, p, N)


def format_padic(x: PadicNumber) -> str:
    return "0" if x.is_zero else f"p^{x.valuation}*{x.mantissa}"
