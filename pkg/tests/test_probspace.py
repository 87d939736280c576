import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from padicmart.io import dump_model, load_model
from padicmart.padic import Magnitude, from_rational
from padicmart.probspace import (
    FiniteProbSpace,
    Filtration,
    InvalidFiltration,
    InvalidPartition,
    InvalidSpace,
    InvalidStoppingTime,
    Partition,
    RandomVariableK,
    SpaceMismatch,
    StoppingTime,
    all_stopping_times,
    first_hitting_time,
    haar_sample,
    independent_product,
    is_independent,
    random_stopping_time,
    refine_check,
    sigma_T,
)
from padicmart.verify import random_filtration, random_refinement, random_space

ABC = FiniteProbSpace.uniform(["a", "b", "c"])


def part(space, *atoms):
    return Partition(space, tuple(frozenset(a) for a in atoms))


# spaces and partitions --------------------------------------------------------

def test_space_validation():
    with pytest.raises(InvalidSpace):
        FiniteProbSpace(("a", "b"), (Fraction(1, 2), Fraction(1, 3)))
    with pytest.raises(InvalidSpace):
        FiniteProbSpace(("a", "b"), (Fraction(1), Fraction(0)))
    with pytest.raises(InvalidSpace):
        FiniteProbSpace(("a", "a"), (Fraction(1, 2), Fraction(1, 2)))


def test_partition_validation():
    with pytest.raises(InvalidPartition):
        part(ABC, "a", "b")                # c missing
    with pytest.raises(InvalidPartition):
        part(ABC, "ab", "bc")              # overlap
    with pytest.raises(InvalidPartition):
        part(ABC, "abc", "")               # empty atom


def test_refine_check_examples():
    G = part(ABC, "ab", "c")
    assert refine_check(Partition.trivial(ABC), G)
    assert refine_check(G, G)
    assert not refine_check(G, part(ABC, "a", "bc"))
    with pytest.raises(SpaceMismatch):
        refine_check(G, Partition.trivial(FiniteProbSpace.uniform(["x"])))


def test_filtration_must_refine():
    with pytest.raises(InvalidFiltration):
        Filtration((part(ABC, "ab", "c"), part(ABC, "a", "bc")))


def test_generated_by_level_sets():
    X = RandomVariableK(ABC, tuple(from_rational(v, 1, 5, 12) for v in (1, 1, 2)))
    assert Partition.generated_by(X) == part(ABC, "ab", "c")


# stopping times -------------------------------------------------------------------

F3 = Filtration((Partition.trivial(ABC), part(ABC, "ab", "c"), Partition.discrete(ABC)))


def test_sigma_T_constant():
    for n in range(3):
        assert sigma_T(StoppingTime.constant(F3, n)) == F3[n]


def test_sigma_T_mixed():
    T = StoppingTime.from_map(F3, {"a": 2, "b": 2, "c": 1})
    assert sigma_T(T) == part(ABC, "a", "b", "c")
    F = Filtration((part(ABC, "ab", "c"), Partition.discrete(ABC)))
    T = StoppingTime.from_map(F, {"a": 1, "b": 1, "c": 0})
    assert sigma_T(T) == part(ABC, "a", "b", "c")
    T = StoppingTime.from_map(F, {"a": 0, "b": 0, "c": 1})
    assert sigma_T(T) == part(ABC, "ab", "c")


def test_nonmeasurable_stopping_time():
    with pytest.raises(InvalidStoppingTime):
        StoppingTime.from_map(F3, {"a": 1, "b": 2, "c": 2})


def test_all_stopping_times():
    values = sorted(T.values for T in all_stopping_times(F3))
    assert values == [(0, 0, 0), (1, 1, 1), (1, 1, 2), (2, 2, 1), (2, 2, 2)]


def test_first_hitting_time():
    T = first_hitting_time(F3, lambda n, w: n >= 1 and w == "c")
    assert T.values == (2, 2, 1)


@given(st.integers(0, 10**6))
def test_sigma_T_is_sandwiched(seed):
    rng = random.Random(seed)
    space = random_space(rng, rng.randint(1, 8))
    F = random_filtration(rng, space, rng.randint(1, 4))
    T = random_stopping_time(F, rng)
    FT = sigma_T(T)
    assert refine_check(F[0], FT)
    assert refine_check(FT, F[F.horizon])


# serialization -------------------------------------------------------------------

@given(st.integers(0, 10**6))
def test_partition_round_trip(seed):
    rng = random.Random(seed)
    space = random_space(rng, rng.randint(1, 10))
    G = random_refinement(rng, Partition.trivial(space))
    doc = {"p": 5, "precision": 12,
           "outcomes": [{"id": w, "prob": str(q)} for w, q in zip(space.outcomes, space.probs)],
           "partitions": {"G": G.to_lists()}}
    model = load_model(doc)
    assert model.partitions["G"] == G
    assert load_model(dump_model(model)).partitions["G"] == G


# Haar sampling -------------------------------------------------------------------

def test_haar_determinism_and_support():
    assert haar_sample(0, 5, 8, 3, 7) == haar_sample(0, 5, 8, 3, 7)
    assert haar_sample(0, 5, 8, 3, 7) != haar_sample(0, 5, 8, 3, 8)
    assert all(x.is_zero or x.valuation >= 2 for x in haar_sample(2, 5, 8, 200, 1))
    assert all(abs(x) <= Magnitude(0) for x in haar_sample(0, 3, 8, 200, 1))
    assert haar_sample(0, 5, 8, 0, 1) == []


def _digit(x, pos):
    if x.is_zero:
        return 0
    n = x.to_fraction()
    return int(n / Fraction(x.prime) ** pos) % x.prime


@pytest.mark.parametrize("p,k", [(2, 0), (3, 1), (5, 0)])
def test_haar_digits_uniform(p, k):
    xs = haar_sample(k, p, 6, 10_000, seed=123)
    for pos in range(k, k + 6):
        counts = Counter(_digit(x, pos) for x in xs)
        stat = chisquare([counts.get(d, 0) for d in range(p)])
        assert stat.pvalue > 1e-6        # about five sigma


@pytest.mark.parametrize("p", [2, 5])
def test_haar_projective_consistency(p):
    # truncating to two digits gives the uniform law on the coarser lattice
    xs = haar_sample(0, p, 8, 10_000, seed=99)
    counts = Counter(int(x.to_fraction()) % p ** 2 for x in xs)
    stat = chisquare([counts.get(r, 0) for r in range(p ** 2)])
    assert stat.pvalue > 1e-6


# products and independence ------------------------------------------------------

def test_independent_product():
    coin = FiniteProbSpace.uniform(["h", "t"])
    one = independent_product([coin])
    assert one.space.probs == coin.probs and len(one.space) == 2
    two = independent_product([coin, FiniteProbSpace.uniform(["H", "T"])])
    assert len(two.space) == 4 and set(two.space.probs) == {Fraction(1, 4)}
    X = two.lift(0, RandomVariableK(coin, (from_rational(1, 1, 5, 12),
                                           from_rational(2, 1, 5, 12))))
    assert is_independent(X, two.coordinate_partition([1]))
    assert not is_independent(X, two.coordinate_partition([0]))
