"""Finite probability spaces, random variables, partitions and stopping times.

Every outcome carries strictly positive mass, so essential suprema are plain
maxima and "almost surely" means "everywhere".
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence, Union

from .padic import Magnitude, PadicNumber, add, mul, neg, sub


class SpaceMismatch(ValueError):
    pass


class InvalidSpace(ValueError):
    pass


class InvalidPartition(ValueError):
    pass


class InvalidFiltration(ValueError):
    pass


class InvalidStoppingTime(ValueError):
    pass


Real = Union[Fraction, Magnitude]


@dataclass(frozen=True)
class FiniteProbSpace:
    outcomes: tuple[str, ...]
    probs: tuple[Fraction, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        object.__setattr__(self, "probs", tuple(Fraction(q) for q in self.probs))
        if not self.outcomes:
            raise InvalidSpace("a probability space needs at least one outcome")
        if len(self.outcomes) != len(self.probs):
            raise InvalidSpace("one probability per outcome is required")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise InvalidSpace("outcome identifiers must be unique")
        if any(q <= 0 for q in self.probs):
            raise InvalidSpace("null outcomes are not allowed")
        if sum(self.probs) != 1:
            raise InvalidSpace(f"probabilities sum to {sum(self.probs)}, not 1")
        object.__setattr__(self, "_index",
                           {w: i for i, w in enumerate(self.outcomes)})

    @classmethod
    def uniform(cls, outcomes: Sequence[str]) -> "FiniteProbSpace":
        n = len(outcomes)
        return cls(tuple(outcomes), (Fraction(1, n),) * n)

    def __len__(self) -> int:
        return len(self.outcomes)

    def index(self, omega: str) -> int:
        return self._index[omega]

    def prob(self, event: Iterable[str]) -> Fraction:
        return sum((self.probs[self._index[w]] for w in set(event)), Fraction(0))


def _same_space(*objs) -> FiniteProbSpace:
    space = objs[0].space
    for o in objs[1:]:
        if o.space != space:
            raise SpaceMismatch("objects live on different probability spaces")
    return space


@dataclass(frozen=True)
class RandomVariableK:
    """A p-adic valued random variable; ``values`` follow ``space.outcomes``."""

    space: FiniteProbSpace
    values: tuple[PadicNumber, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) != len(self.space):
            raise InvalidSpace("a random variable needs one value per outcome")
        primes = {x.prime for x in self.values}
        if len(primes) != 1:
            raise InvalidSpace("all values must lie in the same Q_p")

    @classmethod
    def from_map(cls, space: FiniteProbSpace,
                 mapping: Mapping[str, PadicNumber]) -> "RandomVariableK":
        missing = set(space.outcomes) - set(mapping)
        if missing:
            raise InvalidSpace(f"no value for outcomes {sorted(missing)}")
        return cls(space, tuple(mapping[w] for w in space.outcomes))

    @classmethod
    def constant(cls, space: FiniteProbSpace, c: PadicNumber) -> "RandomVariableK":
        return cls(space, (c,) * len(space))

    @property
    def prime(self) -> int:
        return self.values[0].prime

    @property
    def precision(self) -> int:
        return min(x.precision for x in self.values)

    def __getitem__(self, omega: str) -> PadicNumber:
        return self.values[self.space.index(omega)]

    def items(self):
        return zip(self.space.outcomes, self.values)

    def support(self) -> list[PadicNumber]:
        """Distinct values, in outcome order."""
        return list(dict.fromkeys(self.values))

    def map(self, f: Callable[[PadicNumber], PadicNumber]) -> "RandomVariableK":
        return RandomVariableK(self.space, tuple(f(x) for x in self.values))

    def _zip(self, other, op) -> "RandomVariableK":
        if isinstance(other, RandomVariableK):
            _same_space(self, other)
            return RandomVariableK(self.space, tuple(
                op(x, y) for x, y in zip(self.values, other.values)))
        return self.map(lambda x: op(x, other))

    def __add__(self, other):
        return self._zip(other, add)

    def __sub__(self, other):
        return self._zip(other, sub)

    def __mul__(self, other):
        return self._zip(other, mul)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return self.map(neg)

    def abs(self) -> "RandomVariableR":
        return RandomVariableR(self.space, tuple(abs(x) for x in self.values))

    def is_measurable(self, G: "Partition") -> bool:
        _same_space(self, G)
        return all(len({self[w] for w in atom}) == 1 for atom in G.atoms)


@dataclass(frozen=True)
class RandomVariableR:
    """Nonnegative real random variable with exact values.

    Values are Fractions or Magnitudes (never mixed within one variable).
    """

    space: FiniteProbSpace
    values: tuple[Real, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) != len(self.space):
            raise InvalidSpace("a random variable needs one value per outcome")
        for s in self.values:
            if isinstance(s, Magnitude):
                continue
            if not isinstance(s, (int, Fraction)) or s < 0:
                raise InvalidSpace(f"bad nonnegative exact value {s!r}")

    @classmethod
    def from_map(cls, space, mapping) -> "RandomVariableR":
        return cls(space, tuple(mapping[w] for w in space.outcomes))

    def __getitem__(self, omega: str) -> Real:
        return self.values[self.space.index(omega)]

    def items(self):
        return zip(self.space.outcomes, self.values)

    def __le__(self, other: "RandomVariableR") -> bool:
        """Pointwise (hence almost sure) order."""
        _same_space(self, other)
        return all(s <= t for s, t in zip(self.values, other.values))

    def __ge__(self, other: "RandomVariableR") -> bool:
        return other <= self

    def join(self, other: "RandomVariableR") -> "RandomVariableR":
        _same_space(self, other)
        return RandomVariableR(self.space, tuple(
            max(s, t) for s, t in zip(self.values, other.values)))

    def __mul__(self, other: "RandomVariableR") -> "RandomVariableR":
        _same_space(self, other)
        return RandomVariableR(self.space, tuple(
            s * t for s, t in zip(self.values, other.values)))

    def is_measurable(self, G: "Partition") -> bool:
        _same_space(self, G)
        return all(len({self[w] for w in atom}) == 1 for atom in G.atoms)


@dataclass(frozen=True)
class Partition:
    """A finite partition of the outcomes; it generates a sigma-field.

    Atoms are stored sorted by their first outcome, so equal partitions
    compare equal.
    """

    space: FiniteProbSpace
    atoms: tuple[frozenset, ...]
    _atom_of: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        atoms = [frozenset(a) for a in self.atoms]
        if any(not a for a in atoms):
            raise InvalidPartition("atoms must be nonempty")
        seen: dict[str, int] = {}
        for i, a in enumerate(atoms):
            for w in a:
                if w not in self.space._index:
                    raise InvalidPartition(f"unknown outcome {w!r}")
                if w in seen:
                    raise InvalidPartition(f"outcome {w!r} lies in two atoms")
                seen[w] = i
        if len(seen) != len(self.space):
            missing = set(self.space.outcomes) - set(seen)
            raise InvalidPartition(f"atoms do not cover {sorted(missing)}")
        idx = self.space.index
        atoms.sort(key=lambda a: min(idx(w) for w in a))
        object.__setattr__(self, "atoms", tuple(atoms))
        object.__setattr__(self, "_atom_of",
                           {w: i for i, a in enumerate(atoms) for w in a})

    @classmethod
    def trivial(cls, space: FiniteProbSpace) -> "Partition":
        return cls(space, (frozenset(space.outcomes),))

    @classmethod
    def discrete(cls, space: FiniteProbSpace) -> "Partition":
        return cls(space, tuple(frozenset([w]) for w in space.outcomes))

    @classmethod
    def generated_by(cls, *variables) -> "Partition":
        """Level sets of the joint map ``omega -> (X1(omega), X2(omega), ...)``."""
        space = _same_space(*variables)
        groups: dict[tuple, list[str]] = {}
        for w in space.outcomes:
            groups.setdefault(tuple(v[w] for v in variables), []).append(w)
        return cls(space, tuple(frozenset(g) for g in groups.values()))

    def atom_index(self, omega: str) -> int:
        return self._atom_of[omega]

    def atom_of(self, omega: str) -> frozenset:
        return self.atoms[self._atom_of[omega]]

    def ordered_atom(self, i: int) -> list[str]:
        """Outcomes of atom ``i`` in the space's order."""
        return sorted(self.atoms[i], key=self.space.index)

    def contains_event(self, event: Iterable[str]) -> bool:
        """Whether ``event`` belongs to the generated sigma-field."""
        event = set(event)
        return all(a <= event or not (a & event) for a in self.atoms)

    def to_lists(self) -> list[list[str]]:
        return [self.ordered_atom(i) for i in range(len(self.atoms))]


def refine_check(coarse: Partition, fine: Partition) -> bool:
    """True iff every atom of ``fine`` lies inside one atom of ``coarse``."""
    _same_space(coarse, fine)
    return all(len({coarse.atom_index(w) for w in atom}) == 1
               for atom in fine.atoms)


@dataclass(frozen=True)
class Filtration:
    partitions: tuple[Partition, ...]

    def __post_init__(self):
        object.__setattr__(self, "partitions", tuple(self.partitions))
        if not self.partitions:
            raise InvalidFiltration("a filtration needs at least one partition")
        _same_space(*self.partitions)
        for n in range(1, len(self.partitions)):
            if not refine_check(self.partitions[n - 1], self.partitions[n]):
                raise InvalidFiltration(f"step {n} does not refine step {n - 1}")

    @property
    def space(self) -> FiniteProbSpace:
        return self.partitions[0].space

    @property
    def horizon(self) -> int:
        return len(self.partitions) - 1

    def __getitem__(self, n: int) -> Partition:
        return self.partitions[n]

    def __len__(self) -> int:
        return len(self.partitions)


@dataclass(frozen=True)
class StoppingTime:
    filtration: Filtration
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(t) for t in self.values))
        F = self.filtration
        if len(self.values) != len(F.space):
            raise InvalidStoppingTime("one time per outcome is required")
        for t in self.values:
            if not 0 <= t <= F.horizon:
                raise InvalidStoppingTime(
                    f"time {t} outside 0..{F.horizon}")
        for n in range(F.horizon + 1):
            if not F[n].contains_event(self.event(n)):
                raise InvalidStoppingTime(f"{{T={n}}} is not in F_{n}")

    @classmethod
    def from_map(cls, filtration: Filtration, mapping: Mapping[str, int]):
        return cls(filtration, tuple(mapping[w] for w in filtration.space.outcomes))

    @classmethod
    def constant(cls, filtration: Filtration, n: int) -> "StoppingTime":
        return cls(filtration, (n,) * len(filtration.space))

    @property
    def space(self) -> FiniteProbSpace:
        return self.filtration.space

    def __getitem__(self, omega: str) -> int:
        return self.values[self.space.index(omega)]

    def event(self, n: int) -> set[str]:
        return {w for w, t in zip(self.space.outcomes, self.values) if t == n}


def sigma_T(T: StoppingTime) -> Partition:
    """Partition generating the stopped sigma-field F_T."""
    atoms = []
    for n, part in enumerate(T.filtration.partitions):
        stopped = T.event(n)
        atoms.extend(a for a in part.atoms if a <= stopped)
    return Partition(T.space, tuple(atoms))


def first_hitting_time(filtration: Filtration,
                       hit: Callable[[int, str], bool]) -> StoppingTime:
    """``min{n : hit(n, omega)}``, capped at the horizon.

    ``hit(n, .)`` must be F_n-measurable; the constructor re-checks this.
    """
    values = []
    for w in filtration.space.outcomes:
        t = next((n for n in range(filtration.horizon + 1) if hit(n, w)),
                 filtration.horizon)
        values.append(t)
    return StoppingTime(filtration, tuple(values))


def random_stopping_time(filtration: Filtration, rng: random.Random,
                         stop_prob: float = 0.4) -> StoppingTime:
    """Stop each still-running atom of F_n independently with ``stop_prob``."""
    values: dict[str, int] = {}
    for n, part in enumerate(filtration.partitions):
        for atom in part.atoms:
            if atom & values.keys():
                continue
            if n == filtration.horizon or rng.random() < stop_prob:
                values.update({w: n for w in atom})
    return StoppingTime.from_map(filtration, values)


def all_stopping_times(filtration: Filtration) -> Iterator[StoppingTime]:
    """Every stopping time bounded by the horizon.

    Each atom of F_n either stops at n or passes to its children in F_{n+1};
    the count grows quickly with the horizon.
    """
    def choices(n: int, atom: frozenset) -> list[dict[str, int]]:
        out = [dict.fromkeys(atom, n)]
        if n == filtration.horizon:
            return out
        children = [a for a in filtration[n + 1].atoms if a <= atom]
        for combo in itertools.product(*(choices(n + 1, a) for a in children)):
            merged: dict[str, int] = {}
            for part in combo:
                merged.update(part)
            out.append(merged)
        return out

    roots = [choices(0, a) for a in filtration[0].atoms]
    for combo in itertools.product(*roots):
        values: dict[str, int] = {}
        for part in combo:
            values.update(part)
        yield StoppingTime.from_map(filtration, values)


# Haar measure on p^k Z_p, truncated to finitely many digits ----------------

def haar_sample(k: int, p: int, N: int, count: int, seed: int) -> list[PadicNumber]:
    """Draw ``count`` points of ``p**k Z_p`` with N uniform digits each.

    Digits at positions k..k+N-1 are independent and uniform on 0..p-1; all
    later digits are zero.  The same seed gives the same list.
    """
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        digits = [rng.randrange(p) for _ in range(N)]
        n = sum(d * p ** i for i, d in enumerate(digits))
        out.append(PadicNumber.from_rational(Fraction(p) ** k * n, 1, p, N))
    return out


def haar_variable(k: int, p: int, N: int, digits: int = 1,
                  prefix: str = "d") -> RandomVariableK:
    """Exact law of a Haar point of ``p**k Z_p`` truncated to ``digits`` digits.

    The space is uniform on the ``p**digits`` lattice points.
    """
    space = FiniteProbSpace.uniform([f"{prefix}{n}" for n in range(p ** digits)])
    step = Fraction(p) ** k
    return RandomVariableK(space, tuple(
        PadicNumber.from_rational(step * n, 1, p, N) for n in range(p ** digits)))


@dataclass(frozen=True)
class ProductSpace:
    """Product of independent factor spaces with coordinate projections."""

    space: FiniteProbSpace
    factors: tuple[FiniteProbSpace, ...]
    coordinates: tuple[tuple[str, ...], ...]  # per product outcome

    def coordinate(self, i: int, omega: str) -> str:
        return self.coordinates[self.space.index(omega)][i]

    def lift(self, i: int, X):
        """Pull a variable on factor ``i`` back along the i-th projection."""
        if X.space != self.factors[i]:
            raise SpaceMismatch(f"variable does not live on factor {i}")
        cls = type(X)
        return cls(self.space, tuple(X[c[i]] for c in self.coordinates))

    def coordinate_partition(self, indices: Iterable[int]) -> Partition:
        """Partition generated by the coordinates in ``indices``."""
        indices = list(indices)
        groups: dict[tuple, list[str]] = {}
        for w, c in zip(self.space.outcomes, self.coordinates):
            groups.setdefault(tuple(c[i] for i in indices), []).append(w)
        return Partition(self.space, tuple(frozenset(g) for g in groups.values()))


def independent_product(spaces: Sequence[FiniteProbSpace]) -> ProductSpace:
    if not spaces:
        raise InvalidSpace("need at least one factor space")
    coords, ids, probs = [], [], []
    for combo in itertools.product(*(zip(s.outcomes, s.probs) for s in spaces)):
        c = tuple(w for w, _ in combo)
        coords.append(c)
        ids.append("|".join(c))
        q = Fraction(1)
        for _, qi in combo:
            q *= qi
        probs.append(q)
    return ProductSpace(FiniteProbSpace(tuple(ids), tuple(probs)),
                        tuple(spaces), tuple(coords))


def is_independent(X: RandomVariableK, G: Partition) -> bool:
    """``P(X = x, A) == P(X = x) P(A)`` for every value x and atom A."""
    space = _same_space(X, G)
    for x in X.support():
        level = {w for w, v in X.items() if v == x}
        px = space.prob(level)
        for atom in G.atoms:
            if space.prob(level & atom) != px * space.prob(atom):
                return False
    return True
