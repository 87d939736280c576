"""``padicmart`` command line.

Every command prints JSON (or JSON lines) on stdout.  Exit codes:
0 ok, 1 invariant failure, 2 input or schema error, 3 precision underflow,
4 construction precondition failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

from .balls import Ball
from .expectation import cond_expectation, epsilon, expectation
from .io import Model, SchemaError, exact, load_model, load_model_file, read_json
from .martingale import (
    MarkovChain,
    Martingale,
    MartingaleError,
    convergence_trace,
    optional_sample,
    product_martingale,
    stopped_chain_martingale,
    sum_martingale,
)
from .padic import Magnitude, PadicNumber, PrecisionUnderflow, format_padic, parse_padic
from .probspace import (
    FiniteProbSpace,
    InvalidSpace,
    RandomVariableK,
    StoppingTime,
    first_hitting_time,
    haar_sample,
    haar_variable,
)
from .verify import MUTATIONS, replay, verify

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_PRECISION, EXIT_PRECONDITION = 0, 1, 2, 3, 4


def _emit(obj, pretty: bool) -> None:
    if pretty:
        print(json.dumps(obj, indent=2, sort_keys=True))
    else:
        print(json.dumps(obj, sort_keys=True, separators=(",", ":")))


def _literal(x: PadicNumber) -> dict:
    return {"value": format_padic(x), "valuation": None if x.is_zero else x.valuation}


def _ball(b: Ball) -> dict:
    return b.to_json()


def _variable(model: Model, name: str) -> RandomVariableK:
    if name not in model.vars:
        raise SchemaError(f"unknown variable {name!r}")
    X = model.vars[name]
    if len(X.values) != len(model.space):
        raise SchemaError(f"variable {name!r} is not defined on every outcome")
    return X


# expect / condexpect ----------------------------------------------------------

def cmd_expect(args) -> int:
    model = load_model_file(args.space)
    X = _variable(model, args.var)
    _emit({"expectation": _ball(expectation(X)), "epsilon": str(epsilon(X))},
          args.pretty)
    return EXIT_OK


def cmd_condexpect(args) -> int:
    model = load_model_file(args.space)
    X = _variable(model, args.var)
    ref = args.partition
    if ref.lstrip().startswith("["):
        try:
            ref = json.loads(ref)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"inline partition is not JSON: {exc}") from exc
    G = model.partition(ref)
    field = cond_expectation(X, G)
    atoms = [{"atom": G.ordered_atom(i), "ball": _ball(b), "epsilon": str(b.radius)}
             for i, b in enumerate(field.balls)]
    _emit({"atoms": atoms}, args.pretty)
    return EXIT_OK


# sample ---------------------------------------------------------------------------

def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % d for d in range(2, int(n ** 0.5) + 1))


def cmd_sample(args) -> int:
    if not _is_prime(args.p):
        raise SchemaError(f"--p must be prime, got {args.p}")
    if args.precision < 1 or args.count < 0:
        raise SchemaError("--precision must be >= 1 and --count >= 0")
    for x in haar_sample(args.k, args.p, args.precision, args.count, args.seed):
        print(json.dumps(_literal(x), sort_keys=True, separators=(",", ":")))
    return EXIT_OK


# mart -----------------------------------------------------------------------------

def _explicit_variable(entry: dict, p: int, N: int, prefix: str) -> RandomVariableK:
    doc = {"p": p, "precision": N, "outcomes": entry.get("outcomes"),
           "vars": {"Y": entry.get("values", {})}}
    model = load_model(doc)
    Y = _variable(model, "Y")
    # rename outcomes so factor spaces stay distinguishable in the product
    space = FiniteProbSpace(tuple(f"{prefix}{w}" for w in Y.space.outcomes),
                            Y.space.probs)
    return RandomVariableK(space, Y.values)


def _factors(config: dict, p: int, N: int, shift_one: bool) -> list[RandomVariableK]:
    one = PadicNumber.from_rational(1, 1, p, N)
    if "haar_levels" in config:
        levels = config["haar_levels"]
        digits = config.get("digits", 1)
        if not isinstance(levels, list) or not all(isinstance(k, int) for k in levels):
            raise SchemaError("haar_levels must be a list of integers")
        ys = [haar_variable(k, p, N, digits, prefix=f"y{i}_")
              for i, k in enumerate(levels)]
        return [y.map(lambda x: x + one) for y in ys] if shift_one else ys
    if "summands" in config:
        specs = config["summands"]
        if not isinstance(specs, list):
            raise SchemaError("summands must be a list")
        return [_explicit_variable(s, p, N, f"y{i}_") for i, s in enumerate(specs)]
    raise SchemaError("config needs 'haar_levels' or 'summands'")


def _stopping_times(M: Martingale, specs) -> dict[str, StoppingTime]:
    F = M.filtration
    out = {}
    for entry in specs or []:
        if not isinstance(entry, dict) or "name" not in entry:
            raise SchemaError("each stopping time needs a name")
        name = entry["name"]
        if "constant" in entry:
            out[name] = StoppingTime.constant(F, entry["constant"])
        elif "hitting" in entry:
            # first n with |X_n| >= level; X_n is F_n-measurable
            level = Magnitude.parse(entry["hitting"])
            out[name] = first_hitting_time(F, lambda n, w: abs(M[n][w]) >= level)
        elif "values" in entry:
            out[name] = StoppingTime.from_map(F, entry["values"])
        else:
            raise SchemaError(f"stopping time {name!r} needs constant, hitting or values")
    return out


def build_martingale(kind: str, config: dict) -> Martingale:
    if not isinstance(config, dict):
        raise SchemaError("config must be a JSON object")
    p = config.get("p")
    if not isinstance(p, int) or not _is_prime(p):
        raise SchemaError("config needs a prime 'p'")
    N = config.get("precision", 12)
    if kind == "sum":
        return sum_martingale(_factors(config, p, N, shift_one=False))
    if kind == "prod":
        return product_martingale(_factors(config, p, N, shift_one=True))
    raw = config.get("chain")
    if not isinstance(raw, dict):
        raise SchemaError("markov config needs a 'chain' object")
    try:
        states = [str(s) for s in raw["states"]]
        P = [[exact(q, "transition probability") for q in row] for row in raw["P"]]
        f = {str(s): _parse(v, p, N) for s, v in config["f"].items()}
        horizon = config["horizon"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"markov config is incomplete: {exc}") from exc
    initial = config.get("initial", states[0])
    if isinstance(initial, dict):
        initial = {str(s): exact(q, "initial probability") for s, q in initial.items()}
    chain = MarkovChain(tuple(states), tuple(tuple(r) for r in P))
    if set(f) != set(states):
        raise SchemaError("f must be given on every state")
    return stopped_chain_martingale(chain, f, initial, horizon)


def _parse(text, p: int, N: int) -> PadicNumber:
    try:
        return parse_padic(text, p, N)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise SchemaError(str(exc)) from exc


def cmd_mart(args) -> int:
    config = read_json(args.config)
    M = build_martingale(args.kind, config)
    trace = convergence_trace(M)
    rows = [{"n": n, "norm": str(t)} for n, t in enumerate(trace)]
    sampled = []
    failed = False
    for name, T in _stopping_times(M, config.get("stopping")).items():
        try:
            optional_sample(M, T)
            sampled.append({"name": name, "ok": True})
        except AssertionError:
            sampled.append({"name": name, "ok": False})
            failed = True
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["n", "norm"])
            writer.writerows([r["n"], r["norm"]] for r in rows)
    _emit({"kind": args.kind, "horizon": M.horizon, "trace": rows,
           "membership": [{"n": n, "ok": True} for n in range(M.horizon + 1)],
           "optional_sampling": sampled}, args.pretty)
    return EXIT_FAIL if failed else EXIT_OK


# verify ---------------------------------------------------------------------------

def _p_list(text: str) -> tuple[int, ...]:
    try:
        ps = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise SchemaError(f"bad --p-list {text!r}") from exc
    if not ps or not all(_is_prime(p) for p in ps):
        raise SchemaError(f"--p-list needs primes, got {text!r}")
    return ps


def cmd_verify(args) -> int:
    if args.replay:
        report = replay(read_json(args.replay), args.mutate)
    else:
        if args.instances < 1:
            raise SchemaError("--instances must be >= 1")
        if args.max_outcomes < 1:
            raise SchemaError("--max-outcomes must be >= 1")
        report = verify(args.seed, args.instances, _p_list(args.p_list),
                        args.max_outcomes, args.mutate)
    _emit(report, args.pretty)
    return EXIT_FAIL if report["failures"] else EXIT_OK


# entry point ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="padicmart", description=__doc__.splitlines()[0])
    parser.add_argument("--pretty", action="store_true", help="indent JSON output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expect", help="expectation ball and epsilon of a variable")
    p.add_argument("space", help="space JSON file")
    p.add_argument("var")
    p.set_defaults(func=cmd_expect)

    p = sub.add_parser("condexpect", help="conditional expectation ball field")
    p.add_argument("space", help="space JSON file")
    p.add_argument("var")
    p.add_argument("partition", help="partition name, or inline JSON list of atoms")
    p.set_defaults(func=cmd_condexpect)

    p = sub.add_parser("sample", help="Haar samples from p^k Z_p as JSON lines")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--precision", type=int, default=12)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("mart", help="build a martingale and report its trace")
    p.add_argument("kind", choices=["sum", "prod", "markov"])
    p.add_argument("config", help="config JSON file")
    p.add_argument("--trace", metavar="CSV", help="write the trace as CSV (n,norm)")
    p.set_defaults(func=cmd_mart)

    p = sub.add_parser("verify", help="run the invariant suite on random instances")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--instances", type=int, default=200, help="instances per prime")
    p.add_argument("--p-list", default="2,3,5")
    p.add_argument("--max-outcomes", type=int, default=16)
    p.add_argument("--mutate", choices=sorted(MUTATIONS), help="run against a broken fixture")
    p.add_argument("--replay", metavar="JSON", help="rerun one serialized instance")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, InvalidSpace, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        if isinstance(exc, MartingaleError):
            print(f"precondition failed: {exc}", file=sys.stderr)
            return EXIT_PRECONDITION
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PrecisionUnderflow as exc:
        print(f"precision underflow in {args.command}: {exc}", file=sys.stderr)
        return EXIT_PRECISION


if __name__ == "__main__":
    sys.exit(main())
