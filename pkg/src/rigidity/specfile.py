"""JSON model files: schema, validation, model construction and serialization."""

from __future__ import annotations

import json
import os
from pathlib import Path

import jsonschema
import numpy as np

from . import spectral as sp
from .linalg import BlockOperator, DenseOperator, KoopmanOperator, Operator, ProbeSet, ScaledOperator, \
    ShiftOperator, SpectralUnitary
from .measures import CircleMeasure, LineMeasure
from .semigroups import SpectralGroup

FORMAT_VERSION = 1
WEIGHT_SUM_TOL = 1e-9
SEED_ENV = "RIGIDITY_SEED"


class SpecParseError(ValueError):
    pass


class UnsupportedKind(ValueError):
    """A model section names a kind this tool does not implement."""


class SpecValidationError(ValueError):
    pass


_NUM = {"type": "number"}
_NUMS = {"type": "array", "items": _NUM, "minItems": 1}
_INT = {"type": "integer"}
_POS_INT = {"type": "integer", "minimum": 1}

_COMPLEX = {
    "oneOf": [
        _NUM,
        {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
        {"type": "object", "properties": {"angle": _NUM}, "required": ["angle"], "additionalProperties": False},
        {"type": "object", "properties": {"turns": _NUM}, "required": ["turns"], "additionalProperties": False},
    ]
}


def _kind(name, props, required=()):
    return {
        "type": "object",
        "properties": {"kind": {"const": name}, **props},
        "required": ["kind", *required],
        "additionalProperties": False,
    }


_OPERATOR = {
    "oneOf": [
        _kind("identity", {"dim": _POS_INT}),
        _kind("rotation", {"angle": _NUM, "turns": _NUM}),
        _kind("rational-rotation", {"p": _INT, "q": _POS_INT}, ["p", "q"]),
        _kind("spectral", {"angles": _NUMS, "turns": _NUMS, "weights": _NUMS}),
        _kind("shift", {"dim": _POS_INT}, ["dim"]),
        _kind("koopman", {"permutation": {"type": "array", "items": _INT, "minItems": 1}, "weights": _NUMS},
              ["permutation"]),
        _kind("rescale", {"alpha": {"$ref": "#/$defs/complex"}, "inner": {"$ref": "#/$defs/operator"}},
              ["alpha", "inner"]),
        _kind("dense", {"matrix": {"type": "array", "minItems": 1,
                                   "items": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/complex"}}}},
              ["matrix"]),
        _kind("direct-sum", {"blocks": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/operator"}}},
              ["blocks"]),
    ]
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"complex": _COMPLEX, "operator": _OPERATOR},
    "type": "object",
    "properties": {
        "version": {"const": FORMAT_VERSION},
        "seed": {"type": "integer", "minimum": 0},
        "description": {"type": "string"},
        "operator": {"$ref": "#/$defs/operator"},
        "measure": {
            "oneOf": [
                _kind("circle", {"angles": _NUMS, "turns": _NUMS, "weights": _NUMS}, ["weights"]),
                _kind("line", {"points": _NUMS, "weights": _NUMS}, ["points", "weights"]),
            ]
        },
        "group": {
            "type": "object",
            "properties": {"freqs": _NUMS, "weights": _NUMS},
            "required": ["freqs"],
            "additionalProperties": False,
        },
        "probes": {
            "type": "object",
            "properties": {
                "basis": {"type": "integer", "minimum": 0},
                "random": {"type": "integer", "minimum": 0},
                "support": {"type": ["integer", "null"], "minimum": 1},
                "vectors": {"type": "array", "minItems": 1,
                            "items": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/complex"}}},
            },
            "additionalProperties": False,
        },
        "analysis": {
            "type": "object",
            "properties": {
                "lambda": {"$ref": "#/$defs/complex"},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "horizon": _POS_INT,
                "lane": {"type": "string", "pattern": r"^\d+(:\d+)?$"},
                "max_terms": _POS_INT,
                "min_period": _POS_INT,
                "t0": {"type": "number", "exclusiveMinimum": 0},
                "t_max": {"type": "number", "exclusiveMinimum": 0},
                "step": {"type": "number", "exclusiveMinimum": 0},
                "probe": {"type": "string"},
            },
            "additionalProperties": False,
        },
    },
    "required": ["version"],
    "anyOf": [{"required": ["operator"]}, {"required": ["measure"]}, {"required": ["group"]}],
    "additionalProperties": False,
}


def load_spec(path) -> dict:
    """Read and validate a model file. Raises SpecParseError / SpecValidationError."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"{path}: invalid JSON: {exc}") from exc
    validate_spec(doc)
    return doc


OPERATOR_KINDS = ("identity", "rotation", "rational-rotation", "spectral", "shift", "koopman", "rescale",
                  "dense", "direct-sum")
MEASURE_KINDS = ("circle", "line")


def _check_kinds(doc):
    if not isinstance(doc, dict):
        return
    stack = [doc.get("operator")]
    while stack:
        op = stack.pop()
        if not isinstance(op, dict) or "kind" not in op:
            continue
        if op["kind"] not in OPERATOR_KINDS:
            raise UnsupportedKind(f"unsupported operator kind {op['kind']!r}")
        stack.append(op.get("inner"))
        stack.extend(op.get("blocks") or [])
    measure = doc.get("measure")
    if isinstance(measure, dict) and "kind" in measure and measure["kind"] not in MEASURE_KINDS:
        raise UnsupportedKind(f"unsupported measure kind {measure['kind']!r}")


def validate_spec(doc: dict):
    _check_kinds(doc)
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SpecValidationError(f"schema violation at {where}: {exc.message}") from None
    for where, section in _weight_sections(doc):
        total = float(np.sum(section["weights"]))
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise SpecValidationError(f"weights at {where} sum to {total!r}, not 1")


def _weight_sections(doc):
    stack = [("operator", doc.get("operator"))]
    while stack:
        where, op = stack.pop()
        if not op:
            continue
        if "weights" in op:
            yield where, op
        if op.get("kind") == "rescale":
            stack.append((where + "/inner", op["inner"]))
        if op.get("kind") == "direct-sum":
            stack.extend((f"{where}/blocks/{i}", b) for i, b in enumerate(op["blocks"]))
    for key in ("measure", "group"):
        if key in doc and "weights" in doc[key]:
            yield key, doc[key]


def resolve_seed(doc: dict) -> int:
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise SpecValidationError(f"{SEED_ENV}={env!r} is not an integer") from None
    return int(doc.get("seed", 0))


def parse_complex(value) -> complex:
    """Accept a number, ``[re, im]``, ``{"angle": a}`` or ``{"turns": x}``."""
    if isinstance(value, dict):
        if "angle" in value:
            return complex(np.exp(1j * value["angle"]))
        return complex(np.exp(2j * np.pi * value["turns"]))
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


def parse_lambda_text(text: str) -> complex:
    """CLI form: ``1``, ``-1``, ``1j``, ``0.6+0.8j``, ``turns:0.618``, ``angle:1.2``."""
    text = text.strip()
    head, sep, tail = text.partition(":")
    try:
        if sep and head == "turns":
            return complex(np.exp(2j * np.pi * float(tail)))
        if sep and head == "angle":
            return complex(np.exp(1j * float(tail)))
        return complex(text.replace("i", "j") if text.endswith("i") else text)
    except ValueError:
        raise SpecValidationError(f"cannot parse lambda {text!r}") from None


def _normalized(weights):
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise SpecValidationError("weights must be strictly positive")
    return w / w.sum()


def _angles(section, key="angles"):
    if key in section:
        return np.asarray(section[key], dtype=float)
    if "turns" in section:
        return 2 * np.pi * np.asarray(section["turns"], dtype=float)
    raise SpecValidationError(f"section needs {key!r} or 'turns'")


def build_operator(section: dict) -> Operator:
    kind = section["kind"]
    try:
        if kind == "identity":
            return SpectralUnitary(np.zeros(section.get("dim", 1)))
        if kind == "rotation":
            turns = section.get("turns")
            return sp.rotation(2 * np.pi * turns if turns is not None else section.get("angle", 0.0))
        if kind == "rational-rotation":
            return sp.rational_rotation(section["p"], section["q"])
        if kind == "spectral":
            theta = _angles(section)
            w = _normalized(section["weights"]) if "weights" in section else None
            return sp.spectral(theta, w)
        if kind == "shift":
            return sp.shift(section["dim"])
        if kind == "koopman":
            w = _normalized(section["weights"]) if "weights" in section else None
            return sp.koopman(section["permutation"], w)
        if kind == "rescale":
            return sp.rescale(parse_complex(section["alpha"]), build_operator(section["inner"]))
        if kind == "dense":
            rows = [[parse_complex(v) for v in row] for row in section["matrix"]]
            return sp.dense(np.array(rows, dtype=complex))
        if kind == "direct-sum":
            op = build_operator(section["blocks"][0])
            for block in section["blocks"][1:]:
                op = sp.direct_sum(op, build_operator(block))
            return op
    except SpecValidationError:
        raise
    except (ValueError, TypeError) as exc:
        raise SpecValidationError(f"invalid {kind} operator: {exc}") from None
    raise SpecValidationError(f"unknown operator kind {kind!r}")


def build_measure(section: dict):
    try:
        if section["kind"] == "circle":
            return CircleMeasure(_angles(section), _normalized(section["weights"]))
        return LineMeasure(np.asarray(section["points"], dtype=float), _normalized(section["weights"]))
    except (ValueError, TypeError) as exc:
        raise SpecValidationError(f"invalid measure: {exc}") from None


def build_group(section: dict) -> SpectralGroup:
    freqs = np.asarray(section["freqs"], dtype=float)
    w = _normalized(section["weights"]) if "weights" in section else np.full(freqs.size, 1.0 / freqs.size)
    try:
        return SpectralGroup(freqs, w)
    except ValueError as exc:
        raise SpecValidationError(f"invalid group: {exc}") from None


def build_probes(section: dict | None, dim: int, seed: int) -> ProbeSet:
    section = section or {}
    if "vectors" in section:
        vecs = np.array([[parse_complex(v) for v in vec] for vec in section["vectors"]], dtype=complex).T
        if vecs.shape[0] != dim:
            raise SpecValidationError(f"probe vectors have length {vecs.shape[0]}, model has dim {dim}")
        try:
            return ProbeSet(vecs, f"explicit(count={vecs.shape[1]})")
        except ValueError as exc:
            raise SpecValidationError(str(exc)) from None
    return ProbeSet.default(dim, seed=seed, n_basis=section.get("basis", 8), n_random=section.get("random", 8),
                            support=section.get("support"))


def operator_section(T: Operator) -> dict:
    """Serialize an operator back into a model-file section."""
    if isinstance(T, SpectralUnitary):
        return {"kind": "spectral", "angles": [float(a) for a in T.angles], "weights": [float(w) for w in T.weights]}
    if isinstance(T, ShiftOperator):
        return {"kind": "shift", "dim": T.dim}
    if isinstance(T, KoopmanOperator):
        return {"kind": "koopman", "permutation": [int(s) for s in T.sigma], "weights": [float(w) for w in T.weights]}
    if isinstance(T, ScaledOperator):
        return {"kind": "rescale", "alpha": [T.alpha.real, T.alpha.imag], "inner": operator_section(T.inner_op)}
    if isinstance(T, DenseOperator):
        return {"kind": "dense", "matrix": [[[v.real, v.imag] for v in row] for row in T.matrix.tolist()]}
    if isinstance(T, BlockOperator):
        return {"kind": "direct-sum", "blocks": [operator_section(b) for b in T.blocks]}
    raise TypeError(f"cannot serialize operator kind {T.kind!r}")


def group_section(G: SpectralGroup) -> dict:
    return {"freqs": [float(q) for q in G.freqs], "weights": [float(w) for w in G.weights]}


def dump_json(obj, path):
    """Deterministic UTF-8 JSON with LF line endings."""
    text = json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def write_csv(path, header: tuple, columns):
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(int(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
