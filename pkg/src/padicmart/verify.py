"""Seeded random instances and the invariant suite run by ``padicmart verify``."""
from __future__ import annotations

import random
import zlib
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator
from unittest import mock

from . import balls, oracles
from .balls import Ball, Relation, ball_relation
from .expectation import (
    canonical_center,
    cond_epsilon,
    cond_ess_sup,
    cond_expectation,
    cond_linfty_norm,
    epsilon,
    expectation,
    hausdorff_ballfields,
    linfty_norm,
    member_of_cond_expectation,
    random_member,
    support_point,
)
from .io import Model, dump_model
from .martingale import convergence_trace, martingale_from_target, optional_sample
from .padic import Magnitude, PadicNumber, PrecisionUnderflow
from .probspace import (
    FiniteProbSpace,
    Filtration,
    Partition,
    RandomVariableK,
    RandomVariableR,
    independent_product,
    is_independent,
    random_stopping_time,
    refine_check,
    sigma_T,
)

PRECISION = 12
FLOAT_TOL = 1e-6
FLOAT_P_MAX = 2 ** 26


# random instances -----------------------------------------------------------

def random_space(rng: random.Random, n: int, prefix: str = "w") -> FiniteProbSpace:
    weights = [rng.randint(1, 6) for _ in range(n)]
    total = sum(weights)
    return FiniteProbSpace(tuple(f"{prefix}{i}" for i in range(n)),
                           tuple(Fraction(w, total) for w in weights))


def random_value(rng: random.Random, p: int, N: int = PRECISION) -> PadicNumber:
    if rng.random() < 0.1:
        return PadicNumber.zero(p, N)
    m = rng.randint(1, p ** 4) * rng.choice((1, -1))
    b = rng.choice([q for q in (1, 1, 1, 2, 3, 7) if q % p])
    return PadicNumber.from_rational(Fraction(m, b) * Fraction(p) ** rng.randint(-1, 2),
                                     1, p, N)


def random_variable(rng: random.Random, space: FiniteProbSpace, p: int,
                    N: int = PRECISION) -> RandomVariableK:
    """Values clustered around a few anchors so balls are often nontrivial."""
    anchors = [random_value(rng, p, N) for _ in range(rng.randint(1, 3))]
    values = []
    for _ in space.outcomes:
        a = rng.choice(anchors).to_fraction()
        if rng.random() < 0.7:
            a += Fraction(p) ** rng.randint(0, 3) * rng.randint(0, p ** 2)
        values.append(PadicNumber.from_rational(a, 1, p, N))
    return RandomVariableK(space, tuple(values))


def random_refinement(rng: random.Random, G: Partition) -> Partition:
    atoms = []
    idx = G.space.index
    for atom in G.atoms:
        members = sorted(atom, key=idx)
        if len(members) > 1 and rng.random() < 0.6:
            cut = rng.randint(1, len(members) - 1)
            rng.shuffle(members)
            atoms += [frozenset(members[:cut]), frozenset(members[cut:])]
        else:
            atoms.append(atom)
    return Partition(G.space, tuple(atoms))


def random_filtration(rng: random.Random, space: FiniteProbSpace,
                      horizon: int) -> Filtration:
    parts = [Partition.trivial(space) if rng.random() < 0.5
             else random_refinement(rng, Partition.trivial(space))]
    for _ in range(horizon):
        parts.append(random_refinement(rng, parts[-1]))
    if rng.random() < 0.5:
        parts[-1] = Partition.discrete(space)
    return Filtration(tuple(parts))


def random_measurable(rng: random.Random, G: Partition, p: int,
                      N: int = PRECISION, nonzero: bool = False) -> RandomVariableK:
    per_atom = []
    for _ in G.atoms:
        v = random_value(rng, p, N)
        while nonzero and v.is_zero:
            v = random_value(rng, p, N)
        per_atom.append(v)
    return RandomVariableK(G.space, tuple(
        per_atom[G.atom_index(w)] for w in G.space.outcomes))


def random_real(rng: random.Random, space: FiniteProbSpace) -> RandomVariableR:
    return RandomVariableR(space, tuple(
        Fraction(rng.randint(0, 40), rng.randint(1, 4)) for _ in space.outcomes))


@dataclass
class Instance:
    seed: int
    p: int
    X: RandomVariableK
    Y: RandomVariableK
    Z: RandomVariableK
    filtration: Filtration

    @property
    def space(self) -> FiniteProbSpace:
        return self.X.space

    def rng(self, tag: str) -> random.Random:
        return random.Random(self.seed * 7919 + zlib.crc32(tag.encode()))

    def to_json(self) -> dict:
        model = Model(self.p, PRECISION, self.space,
                      vars={"X": self.X, "Y": self.Y, "Z": self.Z},
                      filtration=self.filtration)
        return {"seed": self.seed, **dump_model(model)}

    @classmethod
    def from_model(cls, seed: int, model: Model) -> "Instance":
        return cls(seed, model.p, model.vars["X"], model.vars["Y"],
                   model.vars["Z"], model.filtration)


def make_instance(seed: int, p: int, max_outcomes: int = 16,
                  max_horizon: int = 4) -> Instance:
    rng = random.Random(seed)
    space = random_space(rng, rng.randint(1, max_outcomes))
    X = random_variable(rng, space, p)
    if rng.random() < 0.5:
        Y = RandomVariableK(space, tuple(
            PadicNumber.from_rational(
                x.to_fraction() + Fraction(p) ** rng.randint(0, 4) * rng.randint(0, p),
                1, p, PRECISION)
            for x in X.values))
    else:
        Y = random_variable(rng, space, p)
    Z = random_variable(rng, space, p)
    F = random_filtration(rng, space, rng.randint(1, max_horizon))
    return Instance(seed, p, X, Y, Z, F)


def policies(inst: Instance, X: RandomVariableK, tag: str):
    """The three selection policies quantified over by the tower checks."""
    return [("canonical_center", canonical_center),
            ("support_point", support_point(X)),
            ("random_member", random_member(inst.seed + zlib.crc32(tag.encode())))]


def _pairs(F: Filtration) -> Iterator[tuple[Partition, Partition]]:
    for i in range(len(F)):
        for j in range(i, len(F)):
            yield F[i], F[j]


# checks ----------------------------------------------------------------------
# Each check raises AssertionError with a message on violation.

def check_expectation_smallest_ball(inst: Instance) -> None:
    for X in (inst.X, inst.Y, inst.Z):
        E = expectation(X)
        assert all(x in E for x in X.values), "support not inside E[X]"
        assert oracle_ok(X, E), f"E[X]={E} disagrees with brute-force minimization"
        assert epsilon(X) == oracles.oracle_epsilon(X), "epsilon disagrees with oracle"


def oracle_ok(X: RandomVariableK, E: Ball) -> bool:
    return oracles.oracle_expectation_agrees(X, E.center.to_fraction(), E.radius)


def check_expectation_continuity(inst: Instance) -> None:
    EX, EY = expectation(inst.X), expectation(inst.Y)
    d = balls.hausdorff_balls(EX, EY)
    assert d <= linfty_norm(inst.X - inst.Y), "d_H(E[X],E[Y]) > ||X-Y||"
    ks = [k for k in (EX.radius_exp, EY.radius_exp) if k is not None]
    depth = max(ks, default=0) + 1
    if all(inst.p ** max(depth - k, 0) <= 3000 for k in ks):
        assert d == oracles.oracle_hausdorff(EX, EY, depth), \
            "hausdorff_balls disagrees with enumeration"


def check_expectation_affine(inst: Instance) -> None:
    rng = inst.rng("affine")
    p = inst.p
    for _ in range(3):
        k, b = random_value(rng, p), random_value(rng, p)
        lhs = expectation(inst.X * k + b)
        rhs = balls.ball_affine(expectation(inst.X), k, b)
        assert lhs == rhs, f"E[kX+b]={lhs} but kE[X]+b={rhs}"


def check_expectation_sum_product(inst: Instance) -> None:
    rng = inst.rng("independent")
    p = inst.p
    s1, s2 = random_space(rng, rng.randint(1, 4), "a"), random_space(rng, rng.randint(1, 4), "b")
    A, B = random_variable(rng, s1, p), random_variable(rng, s2, p)
    prod = independent_product([s1, s2])
    X, Y = prod.lift(0, A), prod.lift(1, B)
    EX, EY = expectation(X), expectation(Y)
    sums = [a + b for a in A.support() for b in B.support()]
    assert expectation(X + Y) == balls.smallest_ball(sums) == balls.ball_sum(EX, EY), \
        "E[X+Y] != E[X]+E[Y] for independent X, Y"
    assert expectation(X * Y) == balls.ball_product(EX, EY), \
        "E[XY] != E[X]E[Y] for independent X, Y"
    # dependent: only inclusion
    rel = ball_relation(expectation(inst.X + inst.Y),
                        balls.ball_sum(expectation(inst.X), expectation(inst.Y)))
    assert rel in (Relation.EQUAL, Relation.FIRST_INSIDE_SECOND), \
        "E[X+Y] not inside E[X]+E[Y]"


def check_cond_ess_sup(inst: Instance) -> None:
    rng = inst.rng("ess_sup")
    space = inst.space
    S1, S2 = random_real(rng, space), random_real(rng, space)
    for G, H in _pairs(inst.filtration):
        E1 = cond_ess_sup(S1, G)
        assert S1 <= E1, "S <= ess sup{S|G} fails"
        extra = random_real(rng, space)
        T = RandomVariableR(space, tuple(
            E1[w] + cond_ess_sup(extra, G)[w] for w in space.outcomes))
        assert T.is_measurable(G) and S1 <= T
        assert cond_ess_sup(S1, G) <= T, "domination by measurable T fails"
        assert cond_ess_sup(S1.join(S2), G).values == \
            E1.join(cond_ess_sup(S2, G)).values, "join rule fails"
        assert cond_ess_sup(S1, H) <= E1, "refining increased the ess sup"


def check_cond_ess_sup_oracle(inst: Instance) -> None:
    rng = inst.rng("ess_sup_oracle")
    S = random_real(rng, inst.space)
    for G in inst.filtration.partitions:
        exact = cond_ess_sup(S, G)
        approx = oracles.oracle_cond_ess_sup(S, G, FLOAT_P_MAX)
        approx64 = oracles.oracle_cond_ess_sup(S, G, 64)
        for w, a, a64 in zip(inst.space.outcomes, approx, approx64):
            e = float(exact[w])
            assert abs(a - e) <= FLOAT_TOL * max(e, 1e-300), \
                f"moment limit {a} far from max {e}"
            # power means increase to the max and lose at most P(max|A)^(1/q)
            pmin = min(inst.space.probs[inst.space.index(v)] for v in G.atom_of(w))
            floor = e * float(pmin / inst.space.prob(G.atom_of(w))) ** (1 / 64)
            assert floor * (1 - 1e-12) <= a64 <= e * (1 + 1e-12), \
                "moment at q=64 outside its bracket"


def check_cond_norm(inst: Instance) -> None:
    rng = inst.rng("cond_norm")
    X, Y, space = inst.X, inst.Y, inst.space
    for G, H in _pairs(inst.filtration):
        W = random_measurable(rng, G, inst.p)
        nX = cond_linfty_norm(X, G)
        assert cond_linfty_norm(W * X, G) == W.abs() * nX, "||WX||_G != |W| ||X||_G"
        # localization: agree on a G-event A
        A = set().union(*rng.sample(G.atoms, rng.randint(1, len(G.atoms))))
        X2 = RandomVariableK(space, tuple(
            x if w in A else y for w, x, y in zip(space.outcomes, X.values, Y.values)))
        n2 = cond_linfty_norm(X2, G)
        assert all(n2[w] == nX[w] for w in A), "norms differ where variables agree"
        # patching over disjoint G-events
        groups = _random_grouping(rng, G)
        Xs = [random_variable(rng, space, inst.p) for _ in groups]
        patched = RandomVariableK(space, tuple(
            Xs[_group_of(groups, w)][w] for w in space.outcomes))
        pn = cond_linfty_norm(patched, G)
        norms = [cond_linfty_norm(V, G) for V in Xs]
        assert all(pn[w] == norms[_group_of(groups, w)][w]
                   for w in space.outcomes), "patching rule fails"
        lhs = cond_linfty_norm(X + Y, G)
        assert lhs <= nX.join(cond_linfty_norm(Y, G)), "ultrametric bound fails"
        assert cond_linfty_norm(X, H) <= nX, "refining increased the norm"
    trivial = cond_linfty_norm(X, Partition.trivial(space))
    assert all(t == linfty_norm(X) for t in trivial.values)


def _random_grouping(rng: random.Random, G: Partition) -> list[set]:
    k = rng.randint(1, len(G.atoms))
    labels = [rng.randrange(k) for _ in G.atoms]
    groups = [set() for _ in range(k)]
    for lab, atom in zip(labels, G.atoms):
        groups[lab] |= atom
    return [g for g in groups if g]


def _group_of(groups, w) -> int:
    return next(i for i, g in enumerate(groups) if w in g)


def check_stopping_locality(inst: Instance) -> None:
    rng = inst.rng("stopping_locality")
    F = inst.filtration
    for _ in range(5):
        T = random_stopping_time(F, rng)
        FT = sigma_T(T)
        assert refine_check(F[0], FT) and refine_check(FT, F[F.horizon])
        nT = cond_linfty_norm(inst.X, FT)
        for n in range(F.horizon + 1):
            nF = cond_linfty_norm(inst.X, F[n])
            assert all(nT[w] == nF[w] for w in T.event(n)), \
                "||X||_{F_T} != ||X||_{F_n} on {T=n}"


def check_cond_expectation(inst: Instance) -> None:
    X, space = inst.X, inst.space
    rng = inst.rng("cond_exp")
    for G in inst.filtration.partitions:
        field = cond_expectation(X, G)
        assert oracles.oracle_cond_expectation_minimality(X, G, field), \
            "ball field is not the per-atom minimizer"
        eps = cond_epsilon(X, G)
        candidates = [field.select(pol) for _, pol in policies(inst, X, "cond_exp")]
        candidates += [candidates[0] + random_measurable(rng, G, inst.p)]
        candidates += [inst.Y, inst.Z]
        for Y in candidates:
            member = member_of_cond_expectation(Y, X, G)
            alt = Y.is_measurable(G) and (X - Y).abs() <= eps
            definitional = Y.is_measurable(G) and \
                cond_linfty_norm(X - Y, G).values == eps.values
            assert member == alt == definitional, "membership characterization fails"
    assert cond_expectation(X, Partition.trivial(space)).balls == (expectation(X),)
    disc = cond_expectation(X, Partition.discrete(space))
    assert all(disc.ball_at(w) == Ball.point(X[w]) for w in space.outcomes)


def check_multiplication_addition(inst: Instance) -> None:
    rng = inst.rng("mult_add")
    X, Y, space, p = inst.X, inst.Y, inst.space, inst.p
    zero = RandomVariableK.constant(space, PadicNumber.zero(p, PRECISION))
    one = RandomVariableK.constant(space, PadicNumber.from_rational(1, 1, p, PRECISION))
    for G in inst.filtration.partitions:
        W = random_measurable(rng, G, p)
        field = cond_expectation(X, G)
        assert cond_expectation(W * X, G) == field.affine(W, zero), "E[WX|G] != W E[X|G]"
        assert cond_expectation(W + X, G) == field.affine(one, W), "E[W+X|G] != W + E[X|G]"
        A = set().union(*rng.sample(G.atoms, rng.randint(1, len(G.atoms))))
        X2 = RandomVariableK(space, tuple(
            x if w in A else y for w, x, y in zip(space.outcomes, X.values, Y.values)))
        f2 = cond_expectation(X2, G)
        assert all(f2.ball_at(w) == field.ball_at(w) for w in A), "localization fails"
        groups = _random_grouping(rng, G)
        Xs = [random_variable(rng, space, p) for _ in groups]
        patched = RandomVariableK(space, tuple(
            Xs[_group_of(groups, w)][w] for w in space.outcomes))
        pf = cond_expectation(patched, G)
        fields = [cond_expectation(V, G) for V in Xs]
        assert all(pf.ball_at(w) == fields[_group_of(groups, w)].ball_at(w)
                   for w in space.outcomes), "patching fails"


def check_independence(inst: Instance) -> None:
    rng = inst.rng("independence")
    s1 = random_space(rng, rng.randint(1, 4), "a")
    s2 = random_space(rng, rng.randint(1, 4), "b")
    prod = independent_product([s1, s2])
    X = prod.lift(0, random_variable(rng, s1, inst.p))
    G2 = random_refinement(rng, Partition.trivial(s2))
    G = Partition(prod.space, tuple(
        frozenset(w for w in prod.space.outcomes if prod.coordinate(1, w) in atom)
        for atom in G2.atoms))
    assert is_independent(X, G)
    E = expectation(X)
    assert all(b == E for b in cond_expectation(X, G).balls), \
        "independent X: conditional balls differ from E[X]"


def check_tower(inst: Instance) -> None:
    X = inst.X
    for G, H in _pairs(inst.filtration):
        epsG = cond_epsilon(X, G)
        assert cond_epsilon(X, H) <= epsG, "eps(X,H) > eps(X,G)"
        fH = cond_expectation(X, H)
        for i, (name, pol) in enumerate(policies(inst, X, "tower_H")):
            Y = fH.select(pol)
            assert cond_epsilon(Y, G) <= epsG, f"eps(Y,G) > eps(X,G) [{name}]"
            # each outer policy meets one inner policy, so all three are used
            name2, pol2 = policies(inst, Y, "tower_G")[i]
            Z = cond_expectation(Y, G).select(pol2)
            assert member_of_cond_expectation(Z, X, G), \
                f"tower property fails [{name}/{name2}]"


def check_continuity(inst: Instance) -> None:
    X, Y, Z = inst.X, inst.Y, inst.Z
    bound = linfty_norm(X - Y)
    for G in inst.filtration.partitions:
        A, B, C = (cond_expectation(V, G) for V in (X, Y, Z))
        d = hausdorff_ballfields(A, B)
        assert d <= bound, "D_H(E[X|G], E[Y|G]) > ||X-Y||"
        assert hausdorff_ballfields(A + C, B + C) <= d, "Minkowski-sum contraction fails"
        if len(G.atoms) <= 2:
            ks = [b.radius_exp for b in A.balls + B.balls if b.radius_exp is not None]
            depth = max(ks, default=0) + 1
            size = 1
            for b in A.balls + B.balls:
                size *= inst.p ** max(depth - b.radius_exp, 0) if b.radius_exp is not None else 1
            if size <= 2000:
                assert d == oracles.oracle_hausdorff_fields(A, B, depth), \
                    "ball-field Hausdorff disagrees with enumeration"


def check_optional_sampling(inst: Instance, stopping_times: int = 8) -> None:
    rng = inst.rng("optional_sampling")
    for name, pol in policies(inst, inst.X, "martingale"):
        M = martingale_from_target(inst.X, inst.filtration, pol, name)
        for _ in range(stopping_times):
            optional_sample(M, random_stopping_time(inst.filtration, rng))


def check_convergence(inst: Instance) -> None:
    M = martingale_from_target(inst.X, inst.filtration)
    trace = convergence_trace(M)
    for n, t in enumerate(trace):
        assert t <= linfty_norm_r(cond_epsilon(inst.X, inst.filtration[n])), \
            "||X_n - X|| exceeds eps(X, F_n)"
    if inst.X.is_measurable(inst.filtration[-1]):
        assert trace[-1].is_zero, "measurable target but trace does not end at zero"


def linfty_norm_r(S: RandomVariableR) -> Magnitude:
    return max(S.values)


CHECKS: dict[str, Callable[[Instance], None]] = {
    "expectation_is_smallest_ball": check_expectation_smallest_ball,
    "expectation_hausdorff_bound": check_expectation_continuity,
    "expectation_affine": check_expectation_affine,
    "expectation_sum_product": check_expectation_sum_product,
    "cond_ess_sup_laws": check_cond_ess_sup,
    "cond_ess_sup_moment_limit": check_cond_ess_sup_oracle,
    "cond_norm_laws": check_cond_norm,
    "cond_norm_stopping_locality": check_stopping_locality,
    "cond_expectation_minimality_and_membership": check_cond_expectation,
    "multiplication_addition": check_multiplication_addition,
    "independence": check_independence,
    "tower_and_spread": check_tower,
    "conditional_continuity": check_continuity,
    "optional_sampling": check_optional_sampling,
    "martingale_convergence": check_convergence,
}


# mutation fixtures -----------------------------------------------------------

def _wrong_radius_ball(points):
    # uses the smallest nonzero distance instead of the largest
    first = points[0]
    dists = [balls.dist(first, x) for x in points]
    nonzero = [d for d in dists if not d.is_zero]
    if not nonzero:
        return Ball.point(first)
    return Ball.around(first, min(nonzero).exponent)


MUTATIONS = {"wrong-radius": (balls, "smallest_ball", _wrong_radius_ball)}


@contextmanager
def mutation(name: str | None):
    if name is None:
        yield
        return
    module, attr, replacement = MUTATIONS[name]
    with mock.patch.object(module, attr, replacement):
        yield


# driver ------------------------------------------------------------------------

def run_checks(inst: Instance, report: dict, names=None) -> dict | None:
    """Run every check on one instance; return the first failure, if any."""
    first = None
    for name, fn in CHECKS.items():
        if names and name not in names:
            continue
        entry = report.setdefault(
            name, {"name": name, "passes": 0, "failures": 0, "precision_skips": 0})
        try:
            fn(inst)
        except PrecisionUnderflow:
            # cancellation exhausted N digits: inconclusive, not a violation
            entry["precision_skips"] += 1
        except Exception as exc:  # any other exception is a violated check
            entry["failures"] += 1
            if first is None:
                first = {"check": name, "error": f"{type(exc).__name__}: {exc}",
                         "instance": inst.to_json()}
        else:
            entry["passes"] += 1
    return first


def instance_seeds(seed: int, p_list, instances: int) -> list[tuple[int, int]]:
    return sorted((seed * 1_000_003 + p * 10_007 + i, p)
                  for p in p_list for i in range(instances))


def verify(seed: int = 42, instances: int = 200, p_list=(2, 3, 5),
           max_outcomes: int = 16, mutate: str | None = None) -> dict:
    if instances < 1:
        raise ValueError("instances must be >= 1")
    per_check: dict[str, dict] = {}
    first_failure = None
    seeds = instance_seeds(seed, p_list, instances)
    with mutation(mutate):
        for s, p in seeds:
            inst = make_instance(s, p, max_outcomes)
            failure = run_checks(inst, per_check)
            if failure and first_failure is None:
                first_failure = failure
    checks = [per_check[name] for name in CHECKS]
    report = {
        "checks": checks,
        "passes": sum(c["passes"] for c in checks),
        "failures": sum(c["failures"] for c in checks),
        "precision_skips": sum(c["precision_skips"] for c in checks),
        "seeds": [s for s, _ in seeds],
        "config": {"seed": seed, "instances": instances, "p_list": list(p_list),
                   "max_outcomes": max_outcomes, "mutation": mutate},
        "violated": sorted(c["name"] for c in checks if c["failures"]),
    }
    if first_failure:
        report["first_failure"] = first_failure
    return report


def replay(document: dict, mutate: str | None = None) -> dict:
    """Rerun the suite on an instance recorded in a report's first_failure."""
    from .io import load_model

    seed = document.get("seed", 0)
    inst = Instance.from_model(seed, load_model(document))
    per_check: dict[str, dict] = {}
    with mutation(mutate):
        failure = run_checks(inst, per_check)
    checks = [per_check[name] for name in CHECKS]
    report = {"checks": checks,
              "passes": sum(c["passes"] for c in checks),
              "failures": sum(c["failures"] for c in checks),
              "precision_skips": sum(c["precision_skips"] for c in checks),
              "seeds": [seed],
              "violated": sorted(c["name"] for c in checks if c["failures"])}
    if failure:
        report["first_failure"] = failure
    return report
