"""Brute-force evaluations of the defining formulas.

Nothing here imports the closed forms in ``balls`` or ``expectation``; values
are handled as exact rationals with a separate valuation routine, and the
conditional essential supremum is evaluated from its moment definition in
floating point.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .padic import Magnitude
from .probspace import Partition, RandomVariableK, RandomVariableR


def _val(r: Fraction, p: int) -> int:
    num, den, v = r.numerator, r.denominator, 0
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def _abs(r: Fraction, p: int) -> Magnitude:
    return Magnitude(None) if r == 0 else Magnitude(_val(r, p))


def _sup_dist(points: Sequence[Fraction], c: Fraction, p: int) -> Magnitude:
    return max(_abs(x - c, p) for x in points)


def _min_radius(points: Sequence[Fraction], p: int) -> tuple[Magnitude, Fraction]:
    """min over candidate centers drawn from ``points`` of the sup distance."""
    best = None
    for c in points:
        r = _sup_dist(points, c, p)
        if best is None or r < best[0]:
            best = (r, c)
    return best


def oracle_epsilon(X: RandomVariableK) -> Magnitude:
    p = X.prime
    return _min_radius([x.to_fraction() for x in X.values], p)[0]


def oracle_expectation_agrees(X: RandomVariableK, center: Fraction,
                              radius: Magnitude) -> bool:
    """Whether ``{y : |y - center| <= radius}`` is the minimizing ball for X.

    The minimizing ball is the set of c with ``sup|X - c| == eps``.  Two balls
    of the same radius coincide as soon as they share a point, so it suffices
    to compare radii and check that the oracle's minimizer is within reach.
    """
    p = X.prime
    pts = [x.to_fraction() for x in X.values]
    eps, c = _min_radius(pts, p)
    return radius == eps and _abs(center - c, p) <= eps


def oracle_cond_ess_sup(S: RandomVariableR, G: Partition, p_max: float,
                        prime: int | None = None) -> list[float]:
    """``E[S^q | G]^(1/q)`` at ``q = p_max``, one float per outcome.

    Evaluated in log space so huge exponents do not overflow.  Magnitude
    values need ``prime`` to become reals.
    """
    space = S.space
    vals = []
    for s in S.values:
        vals.append(s.to_float(prime) if isinstance(s, Magnitude) else float(s))
    vals = np.asarray(vals)
    probs = np.asarray([float(q) for q in space.probs])
    out = np.empty(len(vals))
    for atom in G.atoms:
        idx = np.asarray([space.index(w) for w in atom])
        v, w = vals[idx], probs[idx] / probs[idx].sum()
        pos = v > 0
        if not pos.any():
            out[idx] = 0.0
            continue
        log_moment = logsumexp(p_max * np.log(v[pos]) + np.log(w[pos]))
        out[idx] = math.exp(log_moment / p_max)
    return out.tolist()


def _ball_points(center: Fraction, k: int | None, p: int, depth: int) -> list[Fraction]:
    if k is None:
        return [center]
    step = Fraction(p) ** k
    return [center + r * step for r in range(p ** max(depth - k, 0))]


def oracle_hausdorff(B, C, depth: int) -> Magnitude:
    """Hausdorff distance between the digit-truncated members of two balls."""
    p = B.center.prime
    A1 = _ball_points(B.center.to_fraction(), B.radius_exp, p, depth)
    A2 = _ball_points(C.center.to_fraction(), C.radius_exp, p, depth)

    def directed(S, T):
        return max(min(_abs(s - t, p) for t in T) for s in S)

    return max(directed(A1, A2), directed(A2, A1))


def oracle_hausdorff_fields(F1, F2, depth: int) -> Magnitude:
    """Sup-norm Hausdorff distance between two finite sets of functions.

    The sets are the per-atom products of truncated members; every function
    is enumerated, so keep fields small.
    """
    p = F1.balls[0].prime
    sets = []
    for F in (F1, F2):
        per_atom = [_ball_points(b.center.to_fraction(), b.radius_exp, p, depth)
                    for b in F.balls]
        sets.append(list(itertools.product(*per_atom)))

    def norm(f, g):
        return max(_abs(a - b, p) for a, b in zip(f, g))

    def directed(S, T):
        return max(min(norm(f, g) for g in T) for f in S)

    return max(directed(sets[0], sets[1]), directed(sets[1], sets[0]))


def oracle_cond_expectation_minimality(X: RandomVariableK, G: Partition,
                                       field) -> bool:
    """Check each atom's ball against the defining minimization.

    Candidates are the support points of the atom and one point of every
    child ball (radius divided by p) of the proposed ball.  The ball must
    contain the atom's values, its radius must be attained, and no candidate
    may do strictly better.
    """
    p = X.prime
    for i, atom in enumerate(G.atoms):
        pts = [X[w].to_fraction() for w in atom]
        ball = field.balls[i]
        c, k = ball.center.to_fraction(), ball.radius_exp
        r = Magnitude(k) if k is not None else Magnitude(None)
        if any(_abs(x - c, p) > r for x in pts):
            return False
        candidates = list(pts)
        if k is not None:
            candidates += [c + j * Fraction(p) ** k for j in range(p)]
        best = min(_sup_dist(pts, cand, p) for cand in candidates)
        if best != r:
            return False
    return True


def projection_solution(X: RandomVariableK, G: Partition) -> list[tuple[Fraction, Magnitude]]:
    """Per-atom solution sets of ``min ||X - Y||_inf`` over G-measurable Y.

    Returned as (center, radius) per atom: the constants c with
    ``sup_{atom} |X - c| <= m`` where m is the global optimum.
    """
    p = X.prime
    per_atom = [_min_radius([X[w].to_fraction() for w in atom], p) for atom in G.atoms]
    m = max(r for r, _ in per_atom)
    return [(c, m) for _, c in per_atom]
