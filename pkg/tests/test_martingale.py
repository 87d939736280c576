from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padicmart.expectation import (
    canonical_center,
    cond_expectation,
    expectation,
    member_of_cond_expectation,
    random_member,
    support_point,
)
from padicmart.martingale import (
    HorizonExceeded,
    MarkovChain,
    Martingale,
    NotAMartingale,
    NotHarmonic,
    OneNotInExpectation,
    ZeroNotInExpectation,
    convergence_trace,
    harmonic_check,
    martingale_from_target,
    optional_sample,
    product_martingale,
    stopped_chain_martingale,
    sum_martingale,
)
from padicmart.padic import Magnitude, from_rational
from padicmart.probspace import (
    FiniteProbSpace,
    Filtration,
    Partition,
    RandomVariableK,
    StoppingTime,
    first_hitting_time,
    haar_variable,
    random_stopping_time,
)
from padicmart.verify import make_instance

N = 12


def q(a, p=5):
    return from_rational(a, 1, p, N)


def var(space, *values, p=5):
    return RandomVariableK(space, tuple(q(v, p) for v in values))


ABC = FiniteProbSpace.uniform(["a", "b", "c"])


def const(space, x):
    return RandomVariableK.constant(space, x)


# martingales from a target ---------------------------------------------------------

def test_trivial_filtration_is_constant():
    X = var(ABC, 1, 6, 11)
    F = Filtration((Partition.trivial(ABC),) * 3)
    M = martingale_from_target(X, F)
    center = expectation(X).center
    assert all(Xn == const(ABC, center) for Xn in M.selections)


def test_discrete_filtration_returns_target():
    X = var(ABC, 1, 6, Fraction(1, 5))
    F = Filtration((Partition.discrete(ABC),) * 2)
    M = martingale_from_target(X, F)
    assert all(Xn == X for Xn in M.selections)
    assert all(t.is_zero for t in convergence_trace(M))


def test_digit_revealing_filtration():
    X = haar_variable(0, 5, N, digits=3)
    parts = []
    for n in range(3):
        groups = {}
        for w, x in X.items():
            groups.setdefault(int(x.to_fraction()) % 5 ** (n + 1), set()).add(w)
        parts.append(Partition(X.space, tuple(frozenset(g) for g in groups.values())))
    M = martingale_from_target(X, Filtration(tuple(parts)))
    assert convergence_trace(M) == [Magnitude(1), Magnitude(2), Magnitude.zero()]


def test_constructor_rejects_non_members():
    X = var(ABC, 1, 6, 11)
    F = Filtration((Partition.trivial(ABC),))
    with pytest.raises(NotAMartingale):
        Martingale(F, X, (const(ABC, q(2)),))


# partial sums ---------------------------------------------------------------------------

def haar_levels(levels, shift=0):
    ys = [haar_variable(k, 5, N, prefix=f"y{i}_") for i, k in enumerate(levels)]
    if shift:
        ys = [y.map(lambda x: x + q(shift)) for y in ys]
    return ys


def test_single_summand():
    y = haar_levels([0])[0]
    M = sum_martingale([y])
    assert M.horizon == 0
    assert M[0] == M.target


def test_sum_martingale_rate():
    M = sum_martingale(haar_levels([0, 1, 2, 3]))
    trace = convergence_trace(M)
    assert all(t <= Magnitude(n + 1) for n, t in enumerate(trace))
    assert all(a >= b for a, b in zip(trace, trace[1:]))
    assert trace[-1].is_zero


def test_zero_not_in_expectation():
    coin = FiniteProbSpace.uniform(["h", "t"])
    with pytest.raises(ZeroNotInExpectation):
        sum_martingale([var(coin, 1, 6)])


# partial products -----------------------------------------------------------------------

def test_product_martingale_of_ones():
    coin = FiniteProbSpace.uniform(["h", "t"])
    ones = [var(coin, 1, 1), var(FiniteProbSpace.uniform(["H", "T"]), 1, 1)]
    M = product_martingale(ones)
    assert all(Xn == const(M.target.space, q(1)) for Xn in M.selections)
    assert all(t.is_zero for t in convergence_trace(M))


def test_product_martingale_rate():
    # Y_k Haar on 1 + 5^(k+1) Z_5
    M = product_martingale(haar_levels([1, 2, 3, 4], shift=1))
    trace = convergence_trace(M)
    assert all(t <= Magnitude(n + 2) for n, t in enumerate(trace))
    assert trace[-1].is_zero


def test_one_not_in_expectation():
    coin = FiniteProbSpace.uniform(["h", "t"])
    with pytest.raises(OneNotInExpectation):
        product_martingale([var(coin, 0, 5)])


# harmonic functions of chains -----------------------------------------------

CHAIN = MarkovChain(("0", "1", "2"), (
    (1, 0, 0), (Fraction(1, 2), 0, Fraction(1, 2)), (0, 0, 1)))


def f_of(p, *values):
    return {str(i): from_rational(v, 1, p, N) for i, v in enumerate(values)}


def test_harmonic_check():
    assert harmonic_check(f_of(5, 7, 7, 7), CHAIN)
    assert harmonic_check(f_of(5, 0, 1, 2), CHAIN)
    assert not harmonic_check(f_of(2, 0, 1, 2), CHAIN)


def test_stopped_chain():
    M0 = stopped_chain_martingale(CHAIN, f_of(5, 0, 1, 2), "1", 0)
    assert M0.horizon == 0 and M0[0] == M0.target
    M = stopped_chain_martingale(CHAIN, f_of(5, 0, 1, 2), "1", 2)
    assert M.horizon == 2
    for n in range(3):
        assert member_of_cond_expectation(M[n], M.target, M.filtration[n])
    with pytest.raises(NotHarmonic):
        stopped_chain_martingale(CHAIN, f_of(2, 0, 1, 2), "1", 2)


def test_chain_initial_law():
    M = stopped_chain_martingale(CHAIN, f_of(5, 0, 1, 2),
                                 {"0": Fraction(1, 3), "1": Fraction(2, 3)}, 1)
    assert len(M.target.space) == 3


# optional sampling ------------------------------------------------------------------------

def test_optional_sampling_constant_and_horizon():
    M = sum_martingale(haar_levels([0, 1, 2]))
    for n in range(3):
        assert optional_sample(M, StoppingTime.constant(M.filtration, n)) == M[n]


def test_optional_sampling_hitting_time():
    M = sum_martingale(haar_levels([0, 1, 2]))
    T = first_hitting_time(M.filtration, lambda n, w: abs(M[n][w]) <= Magnitude(1))
    assert len(set(T.values)) > 1
    XT = optional_sample(M, T)
    assert all(XT[w] == M[T[w]][w] for w in M.target.space.outcomes)


def test_horizon_exceeded():
    X = var(ABC, 1, 6, 11)
    M = martingale_from_target(X, Filtration((Partition.trivial(ABC),) * 2))
    longer = Filtration((Partition.trivial(ABC),) * 4)
    with pytest.raises(HorizonExceeded):
        optional_sample(M, StoppingTime.constant(longer, 3))


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_optional_sampling_random(seed):
    inst = make_instance(seed, [2, 3, 5][seed % 3], max_outcomes=10)
    rng = inst.rng("test")
    for policy in (canonical_center, support_point(inst.X), random_member(seed)):
        M = martingale_from_target(inst.X, inst.filtration, policy)
        optional_sample(M, random_stopping_time(inst.filtration, rng))


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_trace_nonincreasing(seed):
    inst = make_instance(seed, [2, 3, 5][seed % 3], max_outcomes=10)
    trace = convergence_trace(martingale_from_target(inst.X, inst.filtration))
    assert all(a >= b for a, b in zip(trace, trace[1:]))


# a valid martingale that is not a one-step martingale ---------------------------------------

def test_not_a_one_step_martingale():
    X = var(ABC, 1, 0, 0)                       # E[X] = Z_5
    F = Filtration((Partition.trivial(ABC),) * 2)
    M = Martingale(F, X, (const(ABC, q(0)), const(ABC, q(1))), "constants")
    step = cond_expectation(M[1], F[0])         # a point ball at 1
    assert not member_of_cond_expectation(M[0], M[1], F[0])
    assert step.balls[0].is_point
