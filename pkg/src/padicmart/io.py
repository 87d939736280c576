"""JSON documents describing spaces, variables, partitions and chains.

Example::

    {"p": 5, "precision": 12,
     "outcomes": [{"id": "a", "prob": "1/2"}, {"id": "b", "prob": "1/2"}],
     "vars": {"X": {"a": "1/3", "b": "p^1*2"}},
     "partitions": {"G": [["a"], ["b"]]},
     "filtration": ["G"],
     "stopping": {"T": {"a": 0, "b": 0}},
     "chain": {"states": ["0", "1"], "P": [["1", "0"], ["1/2", "1/2"]]}}

Numbers are exact: integers or strings such as ``"3/4"``; floats are refused.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from .padic import PadicNumber, format_padic, parse_padic
from .probspace import (
    FiniteProbSpace,
    Filtration,
    InvalidFiltration,
    InvalidPartition,
    InvalidSpace,
    InvalidStoppingTime,
    Partition,
    RandomVariableK,
    StoppingTime,
)


class SchemaError(ValueError):
    pass


def exact(value: Any, what: str = "value") -> Fraction:
    if isinstance(value, bool) or isinstance(value, float):
        raise SchemaError(f"{what} must be an exact rational, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        if "." in value or "e" in value.lower():
            raise SchemaError(f"{what} must be an exact rational, got {value!r}")
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"bad rational for {what}: {value!r}") from exc
    raise SchemaError(f"{what} must be an exact rational, got {value!r}")


@dataclass
class Model:
    p: int
    precision: int
    space: FiniteProbSpace
    vars: dict[str, RandomVariableK] = field(default_factory=dict)
    partitions: dict[str, Partition] = field(default_factory=dict)
    filtration: Filtration | None = None
    stopping: dict[str, StoppingTime] = field(default_factory=dict)
    chain: dict | None = None

    def padic(self, text) -> PadicNumber:
        try:
            return parse_padic(text, self.p, self.precision)
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise SchemaError(str(exc)) from exc

    def partition(self, ref) -> Partition:
        """A named partition, or an inline list of atoms."""
        if isinstance(ref, str):
            if ref not in self.partitions:
                raise SchemaError(f"unknown partition {ref!r}")
            return self.partitions[ref]
        return _partition(self.space, ref)


def _partition(space: FiniteProbSpace, atoms) -> Partition:
    if not isinstance(atoms, list) or not all(isinstance(a, list) for a in atoms):
        raise SchemaError("a partition is a list of lists of outcome ids")
    try:
        return Partition(space, tuple(frozenset(a) for a in atoms))
    except InvalidPartition as exc:
        raise SchemaError(f"invalid partition: {exc}") from exc


def _require(data: dict, key: str, kind):
    if key not in data:
        raise SchemaError(f"missing key {key!r}")
    if not isinstance(data[key], kind):
        raise SchemaError(f"{key!r} has the wrong type")
    return data[key]


def load_model(data: dict) -> Model:
    if not isinstance(data, dict):
        raise SchemaError("document must be a JSON object")
    p = _require(data, "p", int)
    if p < 2 or any(p % d == 0 for d in range(2, int(p ** 0.5) + 1)):
        raise SchemaError(f"p must be prime, got {p}")
    N = data.get("precision", 12)
    if not isinstance(N, int) or isinstance(N, bool) or N < 1:
        raise SchemaError("precision must be a positive integer")

    outcomes = _require(data, "outcomes", list)
    try:
        ids = [o["id"] for o in outcomes]
        probs = [exact(o["prob"], f"prob of {o['id']!r}") for o in outcomes]
        space = FiniteProbSpace(tuple(str(i) for i in ids), tuple(probs))
    except (KeyError, TypeError) as exc:
        raise SchemaError("outcomes must be objects with 'id' and 'prob'") from exc
    except InvalidSpace as exc:
        raise SchemaError(str(exc)) from exc

    model = Model(p, N, space, chain=data.get("chain"))
    for name, values in data.get("vars", {}).items():
        if not isinstance(values, dict):
            raise SchemaError(f"variable {name!r} must map outcomes to values")
        extra = set(values) - set(space.outcomes)
        if extra:
            raise SchemaError(f"variable {name!r} names unknown outcomes {sorted(extra)}")
        try:
            model.vars[name] = RandomVariableK.from_map(
                space, {w: model.padic(v) for w, v in values.items()})
        except InvalidSpace as exc:
            raise SchemaError(f"variable {name!r}: {exc}") from exc
    for name, atoms in data.get("partitions", {}).items():
        model.partitions[name] = _partition(space, atoms)
    if "filtration" in data:
        try:
            model.filtration = Filtration(tuple(
                model.partition(ref) for ref in data["filtration"]))
        except InvalidFiltration as exc:
            raise SchemaError(f"invalid filtration: {exc}") from exc
    for name, times in data.get("stopping", {}).items():
        if model.filtration is None:
            raise SchemaError("stopping times need a filtration")
        try:
            model.stopping[name] = StoppingTime.from_map(model.filtration, times)
        except (KeyError, TypeError, InvalidStoppingTime) as exc:
            raise SchemaError(f"stopping time {name!r}: {exc}") from exc
    return model


def dump_model(model: Model) -> dict:
    out: dict[str, Any] = {
        "p": model.p,
        "precision": model.precision,
        "outcomes": [{"id": w, "prob": str(q)}
                     for w, q in zip(model.space.outcomes, model.space.probs)],
    }
    if model.vars:
        out["vars"] = {name: {w: format_padic(x) for w, x in X.items()}
                       for name, X in model.vars.items()}
    if model.partitions:
        out["partitions"] = {name: G.to_lists() for name, G in model.partitions.items()}
    if model.filtration is not None:
        out["filtration"] = [G.to_lists() for G in model.filtration.partitions]
    if model.stopping:
        out["stopping"] = {name: dict(zip(model.space.outcomes, T.values))
                           for name, T in model.stopping.items()}
    if model.chain is not None:
        out["chain"] = model.chain
    return out


def read_json(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc


def load_model_file(path: str | Path) -> Model:
    return load_model(read_json(path))
