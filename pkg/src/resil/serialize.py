"""Document formats: circuits, schedules, reports, CSV tables.

All documents are JSON objects with a ``version`` field (currently 1).
Operators are lists of Pauli terms ``{"coeff": c, "ops": [[qubit, letter],
...]}`` (empty ``ops`` is the identity); the register size comes from the
enclosing document.  Malformed documents raise :class:`SchemaError` whose
message starts with the path of the offending field, e.g.
``layers[2].gates[0].angle``.

Outputs are reproducible byte-for-byte: JSON is canonical (sorted keys,
fixed separators), floats in CSV are printed with ``%.17g`` (lossless for
doubles), and no timestamps or environment details are embedded.  Reports
carry the schema version and SHA-256 hashes of their input documents.
"""

from __future__ import annotations

import hashlib
import json
from typing import Sequence

import numpy as np

from resil.analog import AnalogNoise, Ramp, Schedule
from resil.circuit import AngleDistribution, Circuit, Gate, Layer, NoiseSite
from resil.core import HermitianOperator, SchemaError, StateVector

__all__ = [
    "SCHEMA_VERSION",
    "operator_to_doc",
    "parse_operator",
    "circuit_to_doc",
    "parse_circuit",
    "schedule_to_doc",
    "parse_schedule",
    "noise_to_doc",
    "parse_analog_noise",
    "load_document",
    "detect_kind",
    "jsonify",
    "canonical_json",
    "dump_json",
    "write_csv",
    "format_float",
    "sha256_hex",
    "make_report",
]

SCHEMA_VERSION = "1"

_NAMED_GATES = {"h", "x", "y", "z", "s"}
_ROTATION_GATES = {"rx", "ry", "rz"}
_TWO_QUBIT_GATES = {"cx", "cz"}


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------

def _obj(doc, path: str) -> dict:
    if not isinstance(doc, dict):
        raise SchemaError(path, f"expected an object, got {type(doc).__name__}")
    return doc

def _req(doc: dict, key: str, path: str):
    _obj(doc, path)
    if key not in doc:
        raise SchemaError(f"{path}.{key}", "missing required field")
    return doc[key]

def _arr(x, path: str) -> list:
    if not isinstance(x, list):
        raise SchemaError(path, f"expected an array, got {type(x).__name__}")
    return x

def _num(x, path: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError(path, f"expected a number, got {type(x).__name__}")
    return float(x)

def _int(x, path: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise SchemaError(path, f"expected an integer, got {type(x).__name__}")
    return x

def _str(x, path: str) -> str:
    if not isinstance(x, str):
        raise SchemaError(path, f"expected a string, got {type(x).__name__}")
    return x


def _wrap_input(fn, path: str):
    """Run a constructor, re-labeling its InputError with the document path."""
    from resil.core import InputError

    try:
        return fn()
    except SchemaError:
        raise
    except InputError as exc:
        raise SchemaError(path, str(exc)) from None


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------

def operator_to_doc(op: HermitianOperator) -> list:
    return [
        {"coeff": c, "ops": [[q, letter] for q, letter in key]}
        for key, c in op.terms
    ]


def parse_operator(doc, n_qubits: int, path: str) -> HermitianOperator:
    terms = []
    for i, term in enumerate(_arr(doc, path)):
        tpath = f"{path}[{i}]"
        coeff = _num(_req(term, "coeff", tpath), f"{tpath}.coeff")
        ops = []
        for j, pair in enumerate(_arr(_req(term, "ops", tpath), f"{tpath}.ops")):
            ppath = f"{tpath}.ops[{j}]"
            pair = _arr(pair, ppath)
            if len(pair) != 2:
                raise SchemaError(ppath, "expected [qubit, letter]")
            ops.append((_int(pair[0], f"{ppath}[0]"), _str(pair[1], f"{ppath}[1]")))
        terms.append((coeff, tuple(ops)))
    return _wrap_input(lambda: HermitianOperator(n_qubits, terms), path)


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

def _state_to_doc(state: StateVector) -> dict:
    return {
        "re": [float(x) for x in state.amplitudes.real],
        "im": [float(x) for x in state.amplitudes.imag],
    }


def _parse_state(doc, n_qubits: int, path: str) -> StateVector:
    re = _arr(_req(doc, "re", path), f"{path}.re")
    im = _arr(_req(doc, "im", path), f"{path}.im")
    if len(re) != len(im):
        raise SchemaError(path, "re and im lengths differ")
    amps = np.array(
        [_num(x, f"{path}.re[{i}]") for i, x in enumerate(re)], dtype=np.float64
    ) + 1j * np.array(
        [_num(x, f"{path}.im[{i}]") for i, x in enumerate(im)], dtype=np.float64
    )
    return _wrap_input(lambda: StateVector(n_qubits, amps), path)


def _matrix_to_doc(m: np.ndarray) -> dict:
    return {
        "re": [[float(x) for x in row] for row in m.real],
        "im": [[float(x) for x in row] for row in m.imag],
    }


def _parse_matrix(doc, path: str) -> np.ndarray:
    re = _arr(_req(doc, "re", path), f"{path}.re")
    im = _arr(_req(doc, "im", path), f"{path}.im")
    try:
        return np.asarray(re, dtype=np.float64) + 1j * np.asarray(im, dtype=np.float64)
    except (ValueError, TypeError):
        raise SchemaError(path, "re/im must be rectangular numeric arrays") from None


# ---------------------------------------------------------------------------
# Circuits
# ---------------------------------------------------------------------------

def _gate_to_doc(gate: Gate) -> dict:
    doc: dict = {"kind": gate.name, "qubits": list(gate.qubits)}
    if gate.name in _NAMED_GATES or gate.name in _TWO_QUBIT_GATES:
        return doc
    if gate.name in _ROTATION_GATES:
        doc["angle"] = gate.angle
        return doc
    if gate.generator is not None:
        doc["kind"] = "rot"
        doc["angle"] = gate.angle
        doc["generator"] = operator_to_doc(gate.generator)
        if gate.name not in ("rot", "gate"):
            doc["name"] = gate.name
        return doc
    doc["kind"] = "unitary"
    doc["matrix"] = _matrix_to_doc(gate.unitary)
    if gate.name not in ("u", "gate"):
        doc["name"] = gate.name
    return doc


def _parse_gate(doc, path: str) -> Gate:
    kind = _str(_req(doc, "kind", path), f"{path}.kind")
    qubits = [
        _int(q, f"{path}.qubits[{i}]")
        for i, q in enumerate(_arr(_req(doc, "qubits", path), f"{path}.qubits"))
    ]

    def need(count: int):
        if len(qubits) != count:
            raise SchemaError(f"{path}.qubits", f"{kind} needs {count} qubit(s)")

    if kind in _NAMED_GATES:
        need(1)
        return _wrap_input(lambda: getattr(Gate, kind)(qubits[0]), path)
    if kind in _ROTATION_GATES:
        need(1)
        angle = _num(_req(doc, "angle", path), f"{path}.angle")
        return _wrap_input(lambda: getattr(Gate, kind)(qubits[0], angle), path)
    if kind in _TWO_QUBIT_GATES:
        need(2)
        return _wrap_input(lambda: getattr(Gate, kind)(qubits[0], qubits[1]), path)
    if kind == "rot":
        angle = _num(_req(doc, "angle", path), f"{path}.angle")
        gen = parse_operator(
            _req(doc, "generator", path), len(qubits), f"{path}.generator"
        )
        name = doc.get("name", "rot")
        return _wrap_input(lambda: Gate.rot(gen, angle, qubits, _str(name, f"{path}.name")), path)
    if kind == "unitary":
        matrix = _parse_matrix(_req(doc, "matrix", path), f"{path}.matrix")
        name = doc.get("name", "u")
        return _wrap_input(
            lambda: Gate.unitary_gate(matrix, qubits, _str(name, f"{path}.name")), path
        )
    raise SchemaError(f"{path}.kind", f"unknown gate kind {kind!r}")


def _distribution_to_doc(dist: AngleDistribution) -> dict:
    return {"kind": dist.kind, "sigma": dist.sigma}


def _parse_distribution(doc, path: str) -> AngleDistribution:
    kind = _str(_req(doc, "kind", path), f"{path}.kind")
    sigma = _num(_req(doc, "sigma", path), f"{path}.sigma")
    return _wrap_input(lambda: AngleDistribution(kind, sigma), path)


def _site_to_doc(site: NoiseSite) -> dict:
    doc = {
        "operator": operator_to_doc(site.operator),
        "distribution": _distribution_to_doc(site.distribution),
    }
    if site.paired_gate is not None:
        doc["paired_gate"] = list(site.paired_gate)
    return doc


def _parse_site(doc, n_qubits: int, path: str) -> NoiseSite:
    op = parse_operator(_req(doc, "operator", path), n_qubits, f"{path}.operator")
    dist = _parse_distribution(
        _req(doc, "distribution", path), f"{path}.distribution"
    )
    paired = None
    if doc.get("paired_gate") is not None:
        pair = _arr(doc["paired_gate"], f"{path}.paired_gate")
        if len(pair) != 2:
            raise SchemaError(f"{path}.paired_gate", "expected [layer, gate]")
        paired = (
            _int(pair[0], f"{path}.paired_gate[0]"),
            _int(pair[1], f"{path}.paired_gate[1]"),
        )
    return _wrap_input(lambda: NoiseSite(op, dist, paired), path)


def circuit_to_doc(circuit: Circuit) -> dict:
    doc: dict = {
        "version": 1,
        "qubits": circuit.n_qubits,
        "layers": [
            {
                "gates": [_gate_to_doc(g) for g in layer.gates],
                "noise": [_site_to_doc(s) for s in layer.noise],
            }
            for layer in circuit.layers
        ],
    }
    if circuit.initial_state is not None:
        doc["initial_state"] = _state_to_doc(circuit.initial_state)
    return doc


def parse_circuit(doc) -> Circuit:
    _obj(doc, "$")
    version = _int(_req(doc, "version", "$"), "$.version")
    if version != 1:
        raise SchemaError("$.version", f"unsupported version {version}")
    n = _int(_req(doc, "qubits", "$"), "$.qubits")
    layers = []
    for li, layer_doc in enumerate(_arr(_req(doc, "layers", "$"), "$.layers")):
        lpath = f"layers[{li}]"
        _obj(layer_doc, lpath)
        gates = [
            _parse_gate(g, f"{lpath}.gates[{gi}]")
            for gi, g in enumerate(_arr(layer_doc.get("gates", []), f"{lpath}.gates"))
        ]
        noise = [
            _parse_site(s, n, f"{lpath}.noise[{si}]")
            for si, s in enumerate(_arr(layer_doc.get("noise", []), f"{lpath}.noise"))
        ]
        layers.append(_wrap_input(lambda: Layer(gates, noise), lpath))
    initial = None
    if doc.get("initial_state") is not None:
        initial = _parse_state(doc["initial_state"], n, "initial_state")
    return _wrap_input(lambda: Circuit(n, layers, initial), "$")


# ---------------------------------------------------------------------------
# Schedules and analog noise
# ---------------------------------------------------------------------------

def _ramp_to_doc(ramp: Ramp) -> dict:
    if ramp.kind == "constant":
        return {"kind": "constant", "value": ramp.params[0]}
    if ramp.kind == "linear":
        y0, y1, duration = ramp.params
        return {"kind": "linear", "y0": y0, "y1": y1, "duration": duration}
    if ramp.kind == "table":
        times, values = ramp.params
        return {"kind": "table", "times": list(times), "values": list(values)}
    edges, values = ramp.params
    return {"kind": "steps", "edges": list(edges), "values": list(values)}


def _num_list(x, path: str) -> list[float]:
    return [_num(v, f"{path}[{i}]") for i, v in enumerate(_arr(x, path))]


def parse_ramp(doc, path: str) -> Ramp:
    if isinstance(doc, (int, float)) and not isinstance(doc, bool):
        return Ramp.constant(float(doc))
    kind = _str(_req(doc, "kind", path), f"{path}.kind")
    if kind == "constant":
        return Ramp.constant(_num(_req(doc, "value", path), f"{path}.value"))
    if kind == "linear":
        return _wrap_input(
            lambda: Ramp.linear(
                _num(_req(doc, "y0", path), f"{path}.y0"),
                _num(_req(doc, "y1", path), f"{path}.y1"),
                _num(_req(doc, "duration", path), f"{path}.duration"),
            ),
            path,
        )
    if kind == "table":
        return _wrap_input(
            lambda: Ramp.table(
                _num_list(_req(doc, "times", path), f"{path}.times"),
                _num_list(_req(doc, "values", path), f"{path}.values"),
            ),
            path,
        )
    if kind == "steps":
        return _wrap_input(
            lambda: Ramp.steps(
                _num_list(_req(doc, "edges", path), f"{path}.edges"),
                _num_list(_req(doc, "values", path), f"{path}.values"),
            ),
            path,
        )
    raise SchemaError(f"{path}.kind", f"unknown ramp kind {kind!r}")


def schedule_to_doc(schedule: Schedule) -> dict:
    doc: dict = {
        "version": 1,
        "qubits": schedule.n_qubits,
        "runtime": schedule.runtime,
        "terms": [
            {"operator": operator_to_doc(op), "ramp": _ramp_to_doc(ramp)}
            for op, ramp in schedule.terms
        ],
    }
    if schedule.initial_state is not None:
        doc["initial_state"] = _state_to_doc(schedule.initial_state)
    return doc


def parse_schedule(doc) -> Schedule:
    _obj(doc, "$")
    version = _int(_req(doc, "version", "$"), "$.version")
    if version != 1:
        raise SchemaError("$.version", f"unsupported version {version}")
    n = _int(_req(doc, "qubits", "$"), "$.qubits")
    runtime = _num(_req(doc, "runtime", "$"), "$.runtime")
    terms = []
    for i, term in enumerate(_arr(_req(doc, "terms", "$"), "$.terms")):
        tpath = f"terms[{i}]"
        op = parse_operator(_req(term, "operator", tpath), n, f"{tpath}.operator")
        ramp = parse_ramp(_req(term, "ramp", tpath), f"{tpath}.ramp")
        terms.append((op, ramp))
    initial = None
    if doc.get("initial_state") is not None:
        initial = _parse_state(doc["initial_state"], n, "initial_state")
    return _wrap_input(lambda: Schedule(n, terms, runtime, initial), "$")


def noise_to_doc(noise: AnalogNoise) -> dict:
    doc: dict = {"gamma": _ramp_to_doc(noise.gamma)}
    doc["operator"] = (
        None if noise.operator is None else operator_to_doc(noise.operator)
    )
    return doc


def parse_analog_noise(doc, n_qubits: int, path: str = "noise") -> AnalogNoise:
    gamma = parse_ramp(_req(doc, "gamma", path), f"{path}.gamma")
    op = None
    if doc.get("operator") is not None:
        op = parse_operator(doc["operator"], n_qubits, f"{path}.operator")
    return AnalogNoise(gamma, op)


# ---------------------------------------------------------------------------
# Files, canonical output, hashing
# ---------------------------------------------------------------------------

def load_document(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON in {path}: {exc}") from None
    return _obj(doc, "$")


def detect_kind(doc: dict) -> str:
    """``"circuit"`` for layer documents, ``"schedule"`` for term documents."""
    if "layers" in doc:
        return "circuit"
    if "terms" in doc and "runtime" in doc:
        return "schedule"
    raise SchemaError("$", "document is neither a circuit nor a schedule")


def jsonify(obj):
    """Recursively convert numpy scalars and arrays to plain Python types."""
    if isinstance(obj, dict):
        return {k: jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonify(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace variation."""
    return json.dumps(jsonify(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def dump_json(obj, path: str) -> None:
    """Write deterministic, human-readable JSON (sorted keys, 2-space indent)."""
    text = json.dumps(jsonify(obj), sort_keys=True, indent=2, allow_nan=False)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def format_float(x: float) -> str:
    """Lossless decimal form used in CSV output."""
    return "%.17g" % x


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    """Write a CSV table; floats are printed losslessly, order is preserved."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, bool):
                cells.append("true" if cell else "false")
            elif isinstance(cell, float):
                cells.append(format_float(cell))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def sha256_hex(data) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def make_report(payload: dict, inputs: dict[str, str]) -> dict:
    """Wrap a result payload with the schema version and input hashes.

    ``inputs`` maps a label to the canonical text of that input; only the
    hash is embedded.
    """
    return {
        "schema_version": SCHEMA_VERSION,
        "inputs": {name: {"sha256": sha256_hex(text)} for name, text in inputs.items()},
        **payload,
    }
