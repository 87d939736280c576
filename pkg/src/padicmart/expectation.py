"""Norms, conditional essential suprema and (conditional) expectation balls."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from . import balls
from .balls import Ball
from .padic import Magnitude, PadicNumber
from .probspace import (
    Partition,
    RandomVariableK,
    RandomVariableR,
    SpaceMismatch,
    _same_space,
)


class PartitionMismatch(ValueError):
    pass


def linfty_norm(X: RandomVariableK) -> Magnitude:
    return max(abs(x) for x in X.values)


def cond_ess_sup(S: RandomVariableR, G: Partition) -> RandomVariableR:
    """Per-atom maximum of S.

    Equal to ``lim E[S^q | G]^(1/q)`` because no outcome is null.
    """
    space = _same_space(S, G)
    atom_max = [max(S[w] for w in atom) for atom in G.atoms]
    return RandomVariableR(space, tuple(
        atom_max[G.atom_index(w)] for w in space.outcomes))


def cond_linfty_norm(X: RandomVariableK, G: Partition) -> RandomVariableR:
    return cond_ess_sup(X.abs(), G)


def expectation(X: RandomVariableK) -> Ball:
    """The smallest closed ball containing the support of X."""
    return balls.smallest_ball(X.support())


def epsilon(X: RandomVariableK) -> Magnitude:
    return expectation(X).radius


@dataclass(frozen=True)
class BallField:
    """One ball per atom of ``partition``.

    Stands for the set of G-measurable Y with ``Y(omega)`` in the ball of the
    atom containing omega.
    """

    partition: Partition
    balls: tuple[Ball, ...]

    def __post_init__(self):
        object.__setattr__(self, "balls", tuple(self.balls))
        if len(self.balls) != len(self.partition.atoms):
            raise PartitionMismatch("one ball per atom is required")

    @property
    def space(self):
        return self.partition.space

    def ball_at(self, omega: str) -> Ball:
        return self.balls[self.partition.atom_index(omega)]

    def radii(self) -> RandomVariableR:
        return RandomVariableR(self.space, tuple(
            self.ball_at(w).radius for w in self.space.outcomes))

    def select(self, policy: "Policy") -> RandomVariableK:
        """A member of the set, picking one constant per atom with ``policy``."""
        picks = [policy(ball, self.partition.ordered_atom(i))
                 for i, ball in enumerate(self.balls)]
        return RandomVariableK(self.space, tuple(
            picks[self.partition.atom_index(w)] for w in self.space.outcomes))

    def affine(self, W: RandomVariableK, B: RandomVariableK) -> "BallField":
        """Per-atom image under ``x -> W x + B`` for G-measurable W, B."""
        if not (W.is_measurable(self.partition) and B.is_measurable(self.partition)):
            raise ValueError("coefficients must be measurable for the partition")
        out = []
        for i, ball in enumerate(self.balls):
            w = self.partition.ordered_atom(i)[0]
            out.append(balls.ball_affine(ball, W[w], B[w]))
        return BallField(self.partition, out)

    def __add__(self, other: "BallField") -> "BallField":
        """Minkowski sum of two fields on the same partition."""
        _check_partition(self, other)
        return BallField(self.partition, tuple(
            balls.ball_sum(b, c) for b, c in zip(self.balls, other.balls)))

    def to_json(self) -> dict:
        return {"atoms": self.partition.to_lists(),
                "balls": [b.to_json() for b in self.balls]}


def _check_partition(F1: BallField, F2: BallField) -> None:
    if F1.partition != F2.partition:
        raise PartitionMismatch("ball fields live on different partitions")


def cond_expectation(X: RandomVariableK, G: Partition) -> BallField:
    _same_space(X, G)
    return BallField(G, tuple(
        balls.smallest_ball([X[w] for w in G.ordered_atom(i)])
        for i in range(len(G.atoms))))


def cond_epsilon(X: RandomVariableK, G: Partition) -> RandomVariableR:
    return cond_expectation(X, G).radii()


def member_of_cond_expectation(Y: RandomVariableK, X: RandomVariableK,
                               G: Partition) -> bool:
    """Y is G-measurable and lies in the conditional expectation ball field."""
    _same_space(X, Y, G)
    if not Y.is_measurable(G):
        return False
    field = cond_expectation(X, G)
    return all(Y[G.ordered_atom(i)[0]] in ball for i, ball in enumerate(field.balls))


def hausdorff_ballfields(F1: BallField, F2: BallField) -> Magnitude:
    """Sup-norm Hausdorff distance between the sets two ball fields stand for."""
    _check_partition(F1, F2)
    return max(balls.hausdorff_balls(b, c) for b, c in zip(F1.balls, F2.balls))


# selection policies ---------------------------------------------------------

Policy = Callable[[Ball, Sequence[str]], PadicNumber]


def canonical_center(ball: Ball, atom: Sequence[str]) -> PadicNumber:
    return ball.center


def support_point(X: RandomVariableK) -> Policy:
    """Pick X at the first outcome of the atom (it lies in the atom's ball)."""
    def pick(ball: Ball, atom: Sequence[str]) -> PadicNumber:
        return X[atom[0]]
    return pick


def random_member(seed: int, digits: int = 3) -> Policy:
    """Pick ``center + p**k r`` with r drawn uniformly from ``digits`` digits."""
    rng = random.Random(seed)

    def pick(ball: Ball, atom: Sequence[str]) -> PadicNumber:
        if ball.is_point:
            return ball.center
        p = ball.prime
        r = rng.randrange(p ** digits)
        value = ball.center.to_fraction() + r * Fraction(p) ** ball.radius_exp
        return PadicNumber.from_rational(value, 1, p, ball.center.precision)
    return pick


__all__ = [
    "BallField", "PartitionMismatch", "SpaceMismatch", "linfty_norm",
    "cond_ess_sup", "cond_linfty_norm", "expectation", "epsilon",
    "cond_expectation", "cond_epsilon", "member_of_cond_expectation",
    "hausdorff_ballfields", "canonical_center", "support_point",
    "random_member",
]
