"""JSON descriptions of measures and the compact CLI mini-language.

JSON specs are the canonical form::

    {"family": "bernoulli", "p": "3/4"}
    {"family": "markov", "order": 1, "table": [["9/10", "1/10"], ["1/10", "9/10"]]}
    {"family": "mixture", "components": [...], "weights": [...]}

CLI strings are sugar for the same objects (see ``MINI_LANGUAGE``).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Union

from .core import Alphabet, InputError, ProcessMeasure
from .measures import (
    DeterministicMeasure,
    IIDMeasure,
    MarkovMeasure,
    SparseZerosPredictor,
    TargetSequence,
    bernoulli,
    make_gamma_prime_t,
    make_gamma_t,
    make_hidden_chain,
    uniform,
)
from .predictors import MixturePredictor, finite_memory_grid, rational_markov_grid

MINI_LANGUAGE = """\
measure strings:
  bernoulli:P            i.i.d. binary, P(0) = P (float or p/q)
  uniform:M              uniform i.i.d. on M symbols
  iid:P1,P2,...          i.i.d. with the given probabilities
  markov:K:FILE          order-K Markov; FILE is JSON with "table" (and optional "initial")
  det:T                  unit mass on the target sequence T
  gammat:T               1 - 1/(n+1) on T, 1/2 after a deviation
  gammaprime:T           2/3 on T, 1/2 after a deviation
  hidden[:SMAX]:T        ternary hidden-chain stationary measure built on T
  grid:K:D[:M]           uniform mixture over order-K Markov measures on the 1/D grid
  grid:K1-K2:D[:M]       grids of orders K1..K2 with inverse-square order weights
  sqrtzeros              independent symbols with P(x_n = 0) = 1/n
  {...} or @FILE         a JSON spec
target sequences T:
  const:S  periodic:0110  squares[:SHIFT[:SCALE]]  random:SEED  prefix:0101[:FILL]"""


def _alphabet(d: dict, default_size: int) -> Alphabet:
    if "alphabet" in d and d["alphabet"] is not None:
        return Alphabet(tuple(d["alphabet"]))
    return Alphabet.of_size(default_size)


def from_spec(spec: Union[dict, str]) -> ProcessMeasure:
    """Build a measure from its JSON description."""
    if isinstance(spec, str):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as e:
            raise InputError(f"bad JSON spec: {e}") from None
    if not isinstance(spec, dict) or "family" not in spec:
        raise InputError("a spec is an object with a 'family' key")
    fam = spec["family"]
    try:
        if fam == "bernoulli":
            return bernoulli(spec["p"])
        if fam == "uniform":
            return uniform(int(spec.get("m", 2)))
        if fam == "iid":
            probs = spec["probs"]
            return IIDMeasure(probs, _alphabet(spec, len(probs)))
        if fam == "markov":
            table = spec["table"]
            return MarkovMeasure(int(spec["order"]), table, spec.get("initial", "stationary"),
                                 _alphabet(spec, len(table[0])))
        if fam == "deterministic":
            return DeterministicMeasure(TargetSequence.parse(spec["target"]),
                                        _alphabet(spec, 2))
        if fam == "gammat":
            return make_gamma_t(TargetSequence.parse(spec["target"]))
        if fam == "gammaprime":
            return make_gamma_prime_t(TargetSequence.parse(spec["target"]))
        if fam == "hidden":
            return make_hidden_chain(TargetSequence.parse(spec["target"]),
                                     int(spec.get("s_max", 80)))
        if fam == "sqrtzeros":
            return SparseZerosPredictor()
        if fam == "mixture":
            comps = [from_spec(c) for c in spec["components"]]
            return MixturePredictor(comps, spec["weights"])
        if fam == "grid":
            order, d = spec["order"], int(spec["denominator"])
            alphabet = _alphabet(spec, 2)
            if isinstance(order, list):
                if order != list(range(len(order))):
                    raise InputError("multi-order grids cover orders 0..K")
                return finite_memory_grid(len(order) - 1, d, alphabet)
            return rational_markov_grid(int(order), d, alphabet)
    except (KeyError, TypeError, IndexError) as e:
        raise InputError(f"incomplete {fam!r} spec: {e}") from None
    raise InputError(f"unknown measure family {fam!r}")


def to_spec(measure: ProcessMeasure) -> dict:
    return measure.to_spec()


def parse_measure(text: str) -> ProcessMeasure:
    """Parse a CLI measure string (see ``MINI_LANGUAGE``)."""
    text = text.strip()
    if text.startswith("{"):
        return from_spec(text)
    if text.startswith("@"):
        return from_spec(_read_json(text[1:]))
    head, _, rest = text.partition(":")
    try:
        if head == "bernoulli":
            return bernoulli(_number(rest))
        if head == "uniform":
            return uniform(int(rest or 2))
        if head == "iid":
            probs = [_number(p) for p in rest.split(",")]
            return IIDMeasure(probs)
        if head == "markov":
            k, _, path = rest.partition(":")
            body = _read_json(path)
            table = body["table"] if isinstance(body, dict) else body
            initial = body.get("initial", "stationary") if isinstance(body, dict) else "stationary"
            return MarkovMeasure(int(k), table, initial)
        if head == "det":
            return DeterministicMeasure(TargetSequence.parse(rest))
        if head == "gammat":
            return make_gamma_t(TargetSequence.parse(rest))
        if head == "gammaprime":
            return make_gamma_prime_t(TargetSequence.parse(rest))
        if head == "hidden":
            first, _, tail = rest.partition(":")
            if first.isdigit():
                return make_hidden_chain(TargetSequence.parse(tail), int(first))
            return make_hidden_chain(TargetSequence.parse(rest))
        if head == "grid":
            parts = rest.split(":")
            d = int(parts[1])
            alphabet = Alphabet.of_size(int(parts[2])) if len(parts) > 2 else None
            if "-" in parts[0]:
                lo, hi = (int(v) for v in parts[0].split("-"))
                if lo != 0:
                    raise InputError("multi-order grids start at order 0")
                return finite_memory_grid(hi, d, alphabet)
            return rational_markov_grid(int(parts[0]), d, alphabet)
        if head == "sqrtzeros":
            return SparseZerosPredictor()
    except (ValueError, IndexError, KeyError) as e:
        raise InputError(f"cannot parse measure {text!r}: {e}") from None
    raise InputError(f"unknown measure {text!r}\n{MINI_LANGUAGE}")


def _number(s: str) -> Any:
    s = s.strip()
    return s if "/" in s else float(s)


def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"bad JSON in {path}: {e}") from None
