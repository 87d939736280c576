from fractions import Fraction

import pytest

from padicmart import oracles
from padicmart.balls import Ball
from padicmart.expectation import cond_expectation, epsilon, expectation
from padicmart.padic import Magnitude, from_rational
from padicmart.probspace import FiniteProbSpace, Partition, RandomVariableK, RandomVariableR
from padicmart.verify import make_instance

SPACE = FiniteProbSpace.uniform(["alpha", "beta", "gamma"])
G = Partition(SPACE, (frozenset({"alpha", "beta"}), frozenset({"gamma"})))


def q(a, p=5):
    return from_rational(a, 1, p, 12)


def test_oracle_epsilon_examples():
    assert oracles.oracle_epsilon(RandomVariableK.constant(SPACE, q(4))).is_zero
    X = RandomVariableK(SPACE, (q(1), q(0), q(0)))
    assert oracles.oracle_epsilon(X) == Magnitude(0)


def test_float_ess_sup_shape():
    S = RandomVariableR(SPACE, (Fraction(3), Fraction(1), Fraction(2)))
    at8 = oracles.oracle_cond_ess_sup(S, G, 8)
    at64 = oracles.oracle_cond_ess_sup(S, G, 64)
    assert at64[2] == pytest.approx(2.0, rel=1e-12)
    assert at8[0] <= at64[0] <= 3.0          # power means increase toward the max
    assert at64[0] == at64[1]
    far = oracles.oracle_cond_ess_sup(S, G, 2 ** 26)
    assert far[0] == pytest.approx(3.0, rel=1e-6)


def test_float_ess_sup_constant_is_exact():
    S = RandomVariableR(SPACE, (Fraction(5, 2),) * 3)
    assert oracles.oracle_cond_ess_sup(S, G, 64) == pytest.approx([2.5] * 3, rel=1e-12)


def test_float_ess_sup_of_magnitudes():
    S = RandomVariableR(SPACE, (Magnitude(0), Magnitude(1), Magnitude.zero()))
    vals = oracles.oracle_cond_ess_sup(S, G, 2 ** 26, prime=5)
    assert vals[2] == 0.0
    assert vals[0] == pytest.approx(1.0, rel=1e-6)


def test_oracle_hausdorff_examples():
    Z5, five = Ball.around(q(0), 0), Ball.around(q(0), 1)
    assert oracles.oracle_hausdorff(Z5, five, 2) == Magnitude(0)
    assert oracles.oracle_hausdorff(Z5, Z5, 2).is_zero
    shifted = Ball.around(from_rational(1, 5, 5, 12), 0)
    assert oracles.oracle_hausdorff(Z5, shifted, 2) == Magnitude(-1)


@pytest.mark.parametrize("seed", range(30))
def test_oracles_agree_with_closed_forms(seed):
    inst = make_instance(1000 + seed, [2, 3, 5][seed % 3])
    X = inst.X
    E = expectation(X)
    assert oracles.oracle_epsilon(X) == epsilon(X)
    assert oracles.oracle_expectation_agrees(X, E.center.to_fraction(), E.radius)
    for Gn in inst.filtration.partitions:
        assert oracles.oracle_cond_expectation_minimality(X, Gn, cond_expectation(X, Gn))
    disc = Partition.discrete(inst.space)
    assert oracles.oracle_cond_expectation_minimality(X, disc, cond_expectation(X, disc))


def test_minimality_rejects_a_too_large_ball():
    X = RandomVariableK(SPACE, (q(1), q(6), q(11)))
    field = cond_expectation(X, Partition.trivial(SPACE))
    assert oracles.oracle_cond_expectation_minimality(X, Partition.trivial(SPACE), field)
    bigger = type(field)(field.partition, (Ball.around(q(0), 0),))
    assert not oracles.oracle_cond_expectation_minimality(
        X, Partition.trivial(SPACE), bigger)
