"""Martingales with respect to a single target, and the classical examples."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from . import balls
from .expectation import (
    Policy,
    canonical_center,
    cond_expectation,
    linfty_norm,
    member_of_cond_expectation,
)
from .padic import Magnitude, PadicNumber
from .probspace import (
    FiniteProbSpace,
    Filtration,
    Partition,
    RandomVariableK,
    SpaceMismatch,
    StoppingTime,
    independent_product,
    sigma_T,
)


class MartingaleError(ValueError):
    """A construction precondition failed."""


class NotAMartingale(MartingaleError):
    pass


class ZeroNotInExpectation(MartingaleError):
    pass


class OneNotInExpectation(MartingaleError):
    pass


class InvalidTransitionMatrix(MartingaleError):
    pass


class NotHarmonic(MartingaleError):
    pass


class HorizonExceeded(MartingaleError):
    pass


@dataclass(frozen=True)
class Martingale:
    """Selections ``X_n`` from ``E[X | F_n]`` for one target X.

    The constructor checks membership at every time index.
    """

    filtration: Filtration
    target: RandomVariableK
    selections: tuple[RandomVariableK, ...]
    policy: str = "canonical_center"

    def __post_init__(self):
        object.__setattr__(self, "selections", tuple(self.selections))
        F = self.filtration
        if self.target.space != F.space:
            raise SpaceMismatch("target and filtration live on different spaces")
        if len(self.selections) != len(F):
            raise NotAMartingale("one selection per time index is required")
        for n, Xn in enumerate(self.selections):
            if not member_of_cond_expectation(Xn, self.target, F[n]):
                raise NotAMartingale(f"X_{n} is not in E[X | F_{n}]")

    @property
    def horizon(self) -> int:
        return self.filtration.horizon

    def __getitem__(self, n: int) -> RandomVariableK:
        # constant after the horizon, like a stopped sequence
        return self.selections[min(n, self.horizon)]


def martingale_from_target(X: RandomVariableK, filtration: Filtration,
                           policy: Policy = canonical_center,
                           tag: str = "canonical_center") -> Martingale:
    return Martingale(filtration, X,
                      tuple(cond_expectation(X, G).select(policy)
                            for G in filtration.partitions),
                      tag)


def _product_setup(ys: Sequence[RandomVariableK]):
    if not ys:
        raise MartingaleError("need at least one summand")
    prod = independent_product([y.space for y in ys])
    lifted = [prod.lift(i, y) for i, y in enumerate(ys)]
    partitions = [Partition.generated_by(*lifted[: n + 1]) for n in range(len(ys))]
    return prod, lifted, Filtration(tuple(partitions))


def sum_martingale(ys: Sequence[RandomVariableK]) -> Martingale:
    """Partial sums of independent ``Y_0..Y_m``, each with 0 in E[Y_k].

    Each ``Y_k`` lives on its own space; they are made independent on the
    product space and ``F_n`` is generated by ``Y_0..Y_n``.
    """
    for k, y in enumerate(ys):
        zero = PadicNumber.zero(y.prime, y.precision)
        if zero not in balls.smallest_ball(y.support()):
            raise ZeroNotInExpectation(f"0 is not in E[Y_{k}]")
    _, lifted, F = _product_setup(ys)
    partial, sums = None, []
    for y in lifted:
        partial = y if partial is None else partial + y
        sums.append(partial)
    return Martingale(F, sums[-1], tuple(sums), "partial_sums")


def product_martingale(ys: Sequence[RandomVariableK]) -> Martingale:
    """Partial products of independent ``Y_0..Y_m``, each with 1 in E[Y_k]."""
    for k, y in enumerate(ys):
        one = PadicNumber.from_rational(1, 1, y.prime, y.precision)
        if one not in balls.smallest_ball(y.support()):
            raise OneNotInExpectation(f"1 is not in E[Y_{k}]")
    _, lifted, F = _product_setup(ys)
    partial, prods = None, []
    for y in lifted:
        partial = y if partial is None else partial * y
        prods.append(partial)
    return Martingale(F, prods[-1], tuple(prods), "partial_products")


# Markov chains ----------------------------------------------------------------

@dataclass(frozen=True)
class MarkovChain:
    states: tuple[str, ...]
    P: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "P", tuple(
            tuple(Fraction(q) for q in row) for row in self.P))
        n = len(self.states)
        if n == 0 or len(set(self.states)) != n:
            raise InvalidTransitionMatrix("states must be nonempty and unique")
        if len(self.P) != n or any(len(row) != n for row in self.P):
            raise InvalidTransitionMatrix("P must be square over the states")
        for s, row in zip(self.states, self.P):
            if any(q < 0 for q in row) or sum(row) != 1:
                raise InvalidTransitionMatrix(f"row {s!r} is not a distribution")

    def successors(self, i: str) -> list[tuple[str, Fraction]]:
        row = self.P[self.states.index(i)]
        return [(j, q) for j, q in zip(self.states, row) if q > 0]


def harmonic_check(f: Mapping[str, PadicNumber], chain: MarkovChain) -> bool:
    """f(i) lies in the smallest ball around ``{f(j) : P(i, j) > 0}``."""
    return all(f[i] in balls.smallest_ball([f[j] for j, _ in chain.successors(i)])
               for i in chain.states)


def path_space(chain: MarkovChain, initial: Mapping[str, Fraction],
               horizon: int) -> tuple[FiniteProbSpace, list[tuple[str, ...]]]:
    """All positive-probability paths ``z_0..z_horizon``."""
    paths = [((s,), Fraction(q)) for s, q in initial.items() if Fraction(q) > 0]
    for _ in range(horizon):
        paths = [(path + (j,), q * r)
                 for path, q in paths for j, r in chain.successors(path[-1])]
    ids = ["-".join(path) for path, _ in paths]
    return FiniteProbSpace(tuple(ids), tuple(q for _, q in paths)), [p for p, _ in paths]


def stopped_chain_martingale(chain: MarkovChain, f: Mapping[str, PadicNumber],
                             initial: Mapping[str, Fraction] | str,
                             horizon: int) -> Martingale:
    """``X_n = f(Z_{n ^ N})`` on the path space of depth N, target ``f(Z_N)``."""
    if not harmonic_check(f, chain):
        raise NotHarmonic("f is not harmonic for the chain")
    if isinstance(initial, str):
        initial = {initial: Fraction(1)}
    if sum(Fraction(q) for q in initial.values()) != 1:
        raise InvalidTransitionMatrix("initial law must sum to 1")
    space, paths = path_space(chain, initial, horizon)
    Z = [RandomVariableK(space, tuple(f[path[n]] for path in paths))
         for n in range(horizon + 1)]
    partitions = []
    for n in range(horizon + 1):
        groups: dict[tuple, list[str]] = {}
        for w, path in zip(space.outcomes, paths):
            groups.setdefault(path[: n + 1], []).append(w)
        partitions.append(Partition(space, tuple(frozenset(g) for g in groups.values())))
    return Martingale(Filtration(tuple(partitions)), Z[-1], tuple(Z), "stopped_chain")


# optional sampling and convergence ------------------------------------------

def optional_sample(M: Martingale, T: StoppingTime) -> RandomVariableK:
    """``X_T``; asserts that it lies in ``E[X | F_T]``."""
    if T.space != M.filtration.space:
        raise SpaceMismatch("stopping time and martingale differ in space")
    if max(T.values) > M.horizon:
        raise HorizonExceeded(f"T reaches {max(T.values)} > {M.horizon}")
    if T.filtration != M.filtration:
        raise MartingaleError("stopping time uses a different filtration")
    space = M.target.space
    XT = RandomVariableK(space, tuple(
        M[t][w] for w, t in zip(space.outcomes, T.values)))
    if not member_of_cond_expectation(XT, M.target, sigma_T(T)):
        raise AssertionError("optional sampling failed: X_T not in E[X | F_T]")
    return XT


def convergence_trace(M: Martingale) -> list[Magnitude]:
    return [linfty_norm(Xn - M.target) for Xn in M.selections]
