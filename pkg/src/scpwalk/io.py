"""JSON documents for measures, generators and reports."""

from __future__ import annotations

import json
from fractions import Fraction
import math

import numpy as np

from ._numeric import as_rational, number_to_json
from .errors import ValidationError
from .lattice_measure import (BooleanMeasure, ConditionedSumSpec, ExplicitSpec, LEnsembleSpec,
                              ProductSpec, SpanningTreeSpec, bitstring, build_measure,
                              parse_bitstring)

KINDS = ("explicit", "product", "conditioned_sum", "l_ensemble", "spanning_tree")


def _need(doc, key, where):
    if key not in doc:
        raise ValidationError(f"{where}: missing field {key!r}")
    return doc[key]


def _weight(x):
    if isinstance(x, bool) or not isinstance(x, (int, float, str)):
        raise ValidationError(f"weight {x!r} is not a number or a 'p/q' string")
    try:
        return as_rational(x)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"bad weight {x!r}: {exc}") from None


def spec_from_doc(spec: dict, n: int):
    """Typed spec from its JSON form; ``n`` must agree with the spec's own size."""
    if not isinstance(spec, dict):
        raise ValidationError("spec must be a JSON object")
    kind = _need(spec, "kind", "spec")
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise ValidationError(f"n must be a non-negative integer, got {n!r}")

    def size_check(k):
        if k != n:
            raise ValidationError(f"spec of kind {kind!r} has {k} coordinates but n = {n}")

    if kind == "explicit":
        table = _need(spec, "table", "explicit spec")
        items = table.items() if isinstance(table, dict) else table
        out = {}
        for state, w in items:
            if not isinstance(state, str) or len(state) != n:
                raise ValidationError(f"state {state!r} is not a bit-string of length {n}")
            try:
                mask = parse_bitstring(state) if n else 0
            except ValueError as exc:
                raise ValidationError(str(exc)) from None
            if mask in out:
                raise ValidationError(f"state {state} listed twice")
            out[mask] = _weight(w)
        return ExplicitSpec(n, out)
    if kind in ("product", "conditioned_sum"):
        p = [_weight(x) for x in _need(spec, "p", f"{kind} spec")]
        size_check(len(p))
        if kind == "product":
            return ProductSpec(p)
        k = _need(spec, "k", "conditioned_sum spec")
        if not isinstance(k, int) or isinstance(k, bool):
            raise ValidationError(f"k must be an integer, got {k!r}")
        return ConditionedSumSpec(p, k)
    if kind == "l_ensemble":
        L = np.asarray(_need(spec, "L", "l_ensemble spec"), dtype=float)
        if L.ndim != 2:
            raise ValidationError("L must be a square matrix")
        size_check(L.shape[0])
        return LEnsembleSpec(L)
    if kind == "spanning_tree":
        v = _need(spec, "vertices", "spanning_tree spec")
        edges = [tuple(e) for e in _need(spec, "edges", "spanning_tree spec")]
        if any(len(e) != 2 for e in edges):
            raise ValidationError("edges must be vertex pairs")
        size_check(len(edges))
        return SpanningTreeSpec(v, edges)
    raise ValidationError(f"unknown measure kind {kind!r}; expected one of {KINDS}")


def measure_from_doc(doc: dict) -> BooleanMeasure:
    """Accepts {"n", "spec": {...}} or a bare spec object carrying its own "n"."""
    if not isinstance(doc, dict):
        raise ValidationError("measure document must be a JSON object")
    if "spec" in doc:
        return build_measure(spec_from_doc(doc["spec"], _need(doc, "n", "measure document")))
    return build_measure(spec_from_doc(doc, _need(doc, "n", "measure spec")))


def measure_to_doc(m: BooleanMeasure) -> dict:
    return {
        "n": m.n,
        "exact": m.exact,
        "spec": {"kind": "explicit",
                 "table": {bitstring(s, m.n): number_to_json(w) for s, w in zip(m.support, m.weights)}},
    }


def _default(o):
    if isinstance(o, Fraction):
        return number_to_json(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _finite(o):
    if isinstance(o, np.ndarray):
        return _finite(o.tolist())
    if isinstance(o, float) and not math.isfinite(o):
        return number_to_json(o)
    if isinstance(o, dict):
        return {str(k): _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    return o


def dumps(obj, indent=None) -> str:
    """Deterministic JSON: sorted keys, infinities as strings."""
    return json.dumps(_finite(obj), default=_default, sort_keys=True, indent=indent)


def load_json(path_or_text: str):
    """Parse a file path, or inline JSON when the argument starts with '{' or '['."""
    text = path_or_text.strip()
    try:
        if text[:1] in ("{", "["):
            return json.loads(text)
        with open(path_or_text) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON in {path_or_text[:60]!r}: {exc}") from None
