"""Closed balls ``c + p**k Z_p`` and the ultrametric ball algebra."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .padic import (
    IndistinguishableAtPrecision,
    Magnitude,
    PadicNumber,
    abs_,
    add,
    agree_to,
    dist,
    mul,
)


class Relation(enum.Enum):
    DISJOINT = "disjoint"
    EQUAL = "equal"
    FIRST_INSIDE_SECOND = "first_inside_second"
    SECOND_INSIDE_FIRST = "second_inside_first"


def truncate(x: PadicNumber, k: int) -> PadicNumber:
    """Drop the digits of ``x`` at positions ``>= k``.

    The result keeps the relative precision of ``x`` so that it is an exact
    representative, not a number known only modulo ``p**k``.
    """
    if x.is_zero or x.valuation >= k:
        return PadicNumber.zero(x.prime, x.precision)
    if x.absolute_precision < k:
        raise IndistinguishableAtPrecision(
            f"{x!r} is not known to digit {k}")
    u = x.mantissa % x.prime ** (k - x.valuation)
    return PadicNumber(x.prime, x.valuation, u, x.precision)


@dataclass(frozen=True, eq=False)
class Ball:
    """``{x : |x - center| <= p**-radius_exp}``; ``radius_exp=None`` is a point.

    Non-point balls always hold the truncation-canonical center, so two balls
    are equal as sets exactly when they compare equal.
    """

    center: PadicNumber
    radius_exp: int | None = None

    @classmethod
    def point(cls, c: PadicNumber) -> "Ball":
        return cls(c, None)

    @classmethod
    def around(cls, c: PadicNumber, k: int | None) -> "Ball":
        return cls(c, None) if k is None else cls(truncate(c, k), k)

    @property
    def prime(self) -> int:
        return self.center.prime

    @property
    def is_point(self) -> bool:
        return self.radius_exp is None

    @property
    def radius(self) -> Magnitude:
        return Magnitude(self.radius_exp) if not self.is_point else Magnitude.zero()

    def _key(self):
        if self.is_point:
            return ("pt", self.center)
        c = self.center
        return ("ball", c.prime, self.radius_exp, c.is_zero,
                0 if c.is_zero else c.valuation, c.mantissa)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Ball):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __contains__(self, x: PadicNumber) -> bool:
        if self.is_point:
            return dist(x, self.center).is_zero
        return agree_to(x, self.center, self.radius_exp)

    def __repr__(self) -> str:
        return f"Ball({self.center}, radius={self.radius})"

    def to_json(self) -> dict:
        return {"center": str(self.center), "radius": str(self.radius)}


def smallest_ball(points: Sequence[PadicNumber]) -> Ball:
    """Smallest closed ball containing ``points``.

    In an ultrametric space every point of a set is a center of its smallest
    enclosing ball, and the radius is the largest distance from any one point.
    """
    if not points:
        raise ValueError("smallest_ball needs at least one point")
    first = points[0]
    radius = max(dist(first, x) for x in points)
    if radius.is_zero:
        return Ball.point(first)
    return Ball.around(first, radius.exponent)


def ball_relation(b: Ball, c: Ball) -> Relation:
    if b.is_point and c.is_point:
        return Relation.EQUAL if dist(b.center, c.center).is_zero else Relation.DISJOINT
    kb = b.radius_exp if not b.is_point else None
    kc = c.radius_exp if not c.is_point else None
    outer = min(k for k in (kb, kc) if k is not None)
    if not agree_to(b.center, c.center, outer):
        return Relation.DISJOINT
    if kb == kc:
        return Relation.EQUAL
    if kc is None or (kb is not None and kb < kc):
        return Relation.SECOND_INSIDE_FIRST
    return Relation.FIRST_INSIDE_SECOND


def ball_affine(b: Ball, k: PadicNumber, shift: PadicNumber) -> Ball:
    """Image of ``b`` under ``x -> k*x + shift``."""
    if k.is_zero:
        return Ball.point(shift)
    center = add(mul(k, b.center), shift)
    if b.is_point:
        return Ball.point(center)
    return Ball.around(center, b.radius_exp + k.valuation)


def ball_sum(b: Ball, c: Ball) -> Ball:
    """Minkowski sum ``b + c``, itself a ball."""
    center = add(b.center, c.center)
    radius = max(b.radius, c.radius)
    return Ball.around(center, radius.exponent)


def ball_product(b: Ball, c: Ball) -> Ball:
    """Smallest ball containing ``{x*y : x in b, y in c}``."""
    center = mul(b.center, c.center)
    radius = max(abs_(b.center) * c.radius, abs_(c.center) * b.radius,
                 b.radius * c.radius)
    return Ball.around(center, radius.exponent)


def hausdorff_balls(b: Ball, c: Ball) -> Magnitude:
    rel = ball_relation(b, c)
    if rel is Relation.EQUAL:
        return Magnitude.zero()
    if rel is Relation.DISJOINT:
        return dist(b.center, c.center)
    return max(b.radius, c.radius)


def members(b: Ball, depth: int) -> Iterable[PadicNumber]:
    """Every member of ``b`` with digits below position ``depth`` only.

    A point ball yields just its center.
    """
    if b.is_point:
        yield b.center
        return
    p, N = b.prime, b.center.precision
    k = b.radius_exp
    span = max(depth - k, 0)
    base, step = b.center.to_fraction(), Fraction(p) ** k
    for r in range(p ** span):
        yield PadicNumber.from_rational(base + r * step, 1, p, N)
