"""Command-line interface: ``resil <command> ...``.

Commands
--------
analyze   fragility of one circuit or schedule, by one or more methods
compare   rank several compilations by noise-averaged fragility
sweep     fragility across a one-parameter grid, written as CSV
tradeoff  resilience-runtime lower-bound check
repro     regenerate the headline result tables with pass/fail checks

Inputs are JSON files or builtin model names (``name`` or
``name:key=value,...``; see ``resil.models.MODELS``).  Noise is given as
``biased:p=...[,eta_x=...][,kind=...]`` or ``overrot:sigma=...[,kind=...]``
for circuits, ``gamma:VALUE`` or a JSON noise file for schedules.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.  For a fixed
command line and seed the outputs are byte-identical across runs and worker
counts.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys

import numpy as np

from resil import serialize
from resil.analog import AnalogNoise, Schedule, fragility_analog, trajectory_mc
from resil.circuit import AngleDistribution, Circuit
from resil.core import HermitianOperator, InputError, NumericalError, ResilError
from resil.digital import (
    fragility_avg,
    fragility_exact,
    fragility_mc,
    fragility_perturbative,
)
from resil.geometry import (
    _gate_budget,
    check_tradeoff_analog,
    check_tradeoff_cost,
    check_tradeoff_digital,
    path_length_digital,
)
from resil.models import (
    PSpinModel,
    build_flip_example,
    build_model,
    flip_noise_ops,
    pspin_adiabatic_schedule,
    pspin_bangbang,
    pspin_bangbang_schedule,
    pspin_path_length_closed,
)
from resil.noise import (
    BiasedNoiseSpec,
    attach_biased_noise,
    attach_overrotation_noise,
    sample_angles,
)

_DIGITAL_METHODS = ("avg", "perturbative", "exact", "mc")
_ANALOG_METHODS = ("avg", "mc")
_SWEEP_PARAMS = ("eta_x", "sigma", "gamma", "T", "n")
_REPRO_TARGETS = (
    "flip-forms",
    "code-bias",
    "anneal-runtime",
    "path-scaling",
    "tradeoffs",
)


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as InputError (exit code 1)."""

    def error(self, message):
        raise InputError(message)


# ---------------------------------------------------------------------------
# Input loading
# ---------------------------------------------------------------------------

def _load_entry(raw: str, which: str):
    """Load ``raw`` (file path or builtin spec) as a circuit or schedule.

    Returns ``(obj, display_name, canonical_text)``; the canonical text is
    the sorted-key JSON of the object's document, used for report hashes.
    """
    if os.path.exists(raw):
        doc = serialize.load_document(raw)
        kind = serialize.detect_kind(doc)
        if kind != which:
            raise InputError(f"{raw} holds a {kind} but was passed as --{which}")
        obj = (
            serialize.parse_circuit(doc)
            if which == "circuit"
            else serialize.parse_schedule(doc)
        )
        name = os.path.splitext(os.path.basename(raw))[0]
    else:
        obj = build_model(raw)
        actual = "circuit" if isinstance(obj, Circuit) else "schedule"
        if actual != which:
            raise InputError(f"model {raw!r} builds a {actual}, not a {which}")
        name = raw
    text = serialize.canonical_json(
        serialize.circuit_to_doc(obj)
        if which == "circuit"
        else serialize.schedule_to_doc(obj)
    )
    return obj, name, text


def _gather_inputs(args):
    """All --circuit/--schedule entries as (obj, name, which, text) tuples."""
    entries = [( *_load_entry(raw, "circuit"), "circuit") for raw in args.circuit]
    entries += [(*_load_entry(raw, "schedule"), "schedule") for raw in args.schedule]
    return [(obj, name, which, text) for obj, name, text, which in entries]


def _single_input(args):
    entries = _gather_inputs(args)
    if len(entries) != 1:
        raise InputError("pass exactly one --circuit or --schedule")
    return entries[0]


# ---------------------------------------------------------------------------
# Noise specifications
# ---------------------------------------------------------------------------

def _parse_kv(text: str, spec: str) -> dict:
    params: dict[str, str] = {}
    for item in text.split(","):
        if not item.strip():
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"noise spec {spec!r}: {item!r} is not key=value")
        params[key.strip()] = value.strip()
    return params


def _float_param(params: dict, key: str, spec: str, default=None) -> float:
    if key not in params:
        if default is None:
            raise InputError(f"noise spec {spec!r} needs {key}=...")
        return default
    try:
        return float(params.pop(key))
    except ValueError:
        raise InputError(f"noise spec {spec!r}: {key} is not a number") from None


def parse_noise_arg(spec: str):
    """Parse ``--noise`` into a tagged value.

    Returns one of ``("biased", BiasedNoiseSpec)``, ``("overrot",
    AngleDistribution)``, ``("gamma", float)``, or ``("file", document)``.
    """
    if os.path.exists(spec):
        return ("file", serialize.load_document(spec))
    head, _, rest = spec.partition(":")
    head = head.strip()
    if head == "biased":
        params = _parse_kv(rest, spec)
        kind = params.pop("kind", "two_point")
        p = _float_param(params, "p", spec)
        eta_x = _float_param(params, "eta_x", spec, default=0.5)
        if params:
            raise InputError(f"noise spec {spec!r}: unknown keys {sorted(params)}")
        return ("biased", BiasedNoiseSpec(p, eta_x, kind))
    if head == "overrot":
        params = _parse_kv(rest, spec)
        kind = params.pop("kind", "two_point")
        sigma = _float_param(params, "sigma", spec)
        if params:
            raise InputError(f"noise spec {spec!r}: unknown keys {sorted(params)}")
        return ("overrot", AngleDistribution(kind, sigma))
    if head == "gamma":
        if "=" in rest:
            params = _parse_kv(rest, spec)
            value = _float_param(params, "value", spec)
            if params:
                raise InputError(f"noise spec {spec!r}: unknown keys {sorted(params)}")
        else:
            try:
                value = float(rest)
            except ValueError:
                raise InputError(f"noise spec {spec!r}: expected gamma:VALUE") from None
        return ("gamma", value)
    raise InputError(
        f"unknown noise spec {spec!r}; use biased:..., overrot:..., gamma:..., "
        "or a JSON file path"
    )


def _apply_digital_noise(circuit: Circuit, tag) -> Circuit:
    if tag is None:
        return circuit
    kind, value = tag
    if kind == "biased":
        return attach_biased_noise(circuit, value)
    if kind == "overrot":
        return attach_overrotation_noise(circuit, value)
    raise InputError(f"noise spec kind {kind!r} does not apply to circuits")


def _resolve_analog_noise(schedule: Schedule, tag) -> AnalogNoise:
    if tag is None:
        raise InputError(
            "schedules need --noise gamma:VALUE or a JSON noise file"
        )
    kind, value = tag
    if kind == "gamma":
        return AnalogNoise(value, None)
    if kind == "file":
        return serialize.parse_analog_noise(value, schedule.n_qubits)
    raise InputError(f"noise spec kind {kind!r} does not apply to schedules")


def _noise_text(tag) -> str | None:
    if tag is None:
        return None
    kind, value = tag
    if kind == "file":
        return serialize.canonical_json(value)
    if kind == "gamma":
        return serialize.canonical_json({"gamma": value})
    if kind == "biased":
        return serialize.canonical_json(
            {"biased": {"p": value.p, "eta_x": value.eta_x, "kind": value.kind}}
        )
    return serialize.canonical_json(
        {"overrot": {"sigma": value.sigma, "kind": value.kind}}
    )


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def _parse_methods(text: str, which: str) -> list[str]:
    allowed = _DIGITAL_METHODS if which == "circuit" else _ANALOG_METHODS
    methods = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if item == "all":
            methods.extend(m for m in allowed if m not in methods)
            continue
        if item not in allowed:
            raise InputError(
                f"method {item!r} is not available for a {which} "
                f"(choose from {', '.join(allowed)} or all)"
            )
        if item not in methods:
            methods.append(item)
    if not methods:
        raise InputError("no methods requested")
    return methods


def run_analyze(args) -> int:
    obj, name, which, text = _single_input(args)
    tag = parse_noise_arg(args.noise) if args.noise else None
    methods = _parse_methods(args.method, which)
    results = []
    if which == "circuit":
        circuit = _apply_digital_noise(obj, tag)
        for method in methods:
            if method == "avg":
                results.append(fragility_avg(circuit))
            elif method == "perturbative":
                angles = sample_angles(circuit, args.seed)
                results.append(fragility_perturbative(circuit, angles))
            elif method == "exact":
                angles = sample_angles(circuit, args.seed)
                results.append(fragility_exact(circuit, angles))
            else:
                results.append(
                    fragility_mc(
                        circuit, args.seed, args.samples,
                        statistic=args.statistic, workers=args.workers,
                    )
                )
    else:
        noise = _resolve_analog_noise(obj, tag)
        for method in methods:
            if method == "avg":
                results.append(fragility_analog(obj, noise))
            else:
                results.append(
                    trajectory_mc(
                        obj, noise, args.seed, args.samples,
                        statistic=args.statistic, workers=args.workers,
                    )
                )
    print(f"{which} {name}: {obj.n_qubits} qubits")
    for rep in results:
        line = f"  {rep.method:<22} {rep.value:.12g}"
        if rep.stderr is not None:
            line += f" +/- {rep.stderr:.3g}"
        print(line)
    if args.out:
        inputs = {which: text}
        noise_doc = _noise_text(tag)
        if noise_doc is not None:
            inputs["noise"] = noise_doc
        payload = {
            "command": "analyze",
            "object": which,
            "name": name,
            "qubits": obj.n_qubits,
            "seed": args.seed,
            "results": [rep.to_dict() for rep in results],
        }
        serialize.dump_json(serialize.make_report(payload, inputs), args.out)
        print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def run_compare(args) -> int:
    entries = _gather_inputs(args)
    if len(entries) < 2:
        raise InputError("compare needs at least two inputs")
    kinds = {which for _, _, which, _ in entries}
    if len(kinds) > 1:
        raise InputError("compare inputs must be all circuits or all schedules")
    tag = parse_noise_arg(args.noise) if args.noise else None
    rows = []
    for obj, name, which, _ in entries:
        if which == "circuit":
            circ = _apply_digital_noise(obj, tag)
            value = fragility_avg(circ).value
            budget = float(_gate_budget(circ))
        else:
            value = fragility_analog(obj, _resolve_analog_noise(obj, tag)).value
            budget = obj.runtime
        rows.append((name, which, value, budget))
    rows.sort(key=lambda r: (r[2], r[3], r[0]))
    width = max(len(r[0]) for r in rows)
    print(f"{'rank':<5}{'name':<{width + 2}}{'fragility':<24}budget")
    for rank, (name, which, value, budget) in enumerate(rows, start=1):
        print(f"{rank:<5}{name:<{width + 2}}{value:<24.12g}{budget:.12g}")
    if args.out:
        serialize.write_csv(
            args.out,
            ["rank", "name", "kind", "fragility", "budget"],
            [
                [rank, name, which, value, budget]
                for rank, (name, which, value, budget) in enumerate(rows, start=1)
            ],
        )
        print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _parse_values(text: str) -> list[float]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InputError("--values range must be start:stop:num")
        try:
            start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise InputError(f"bad --values range {text!r}") from None
        if num < 1:
            raise InputError("--values range needs num >= 1")
        return [float(x) for x in np.linspace(start, stop, num)]
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"bad --values list {text!r}") from None
    if not values:
        raise InputError("--values is empty")
    return values


def _spliced_model(raw: str, param: str, value: float) -> str:
    sep = "," if ":" in raw else ":"
    return f"{raw}{sep}{param}={value!r}"


def run_sweep(args) -> int:
    raws = args.circuit + args.schedule
    if len(raws) != 1:
        raise InputError("pass exactly one --circuit or --schedule")
    raw = raws[0]
    which = "circuit" if args.circuit else "schedule"
    values = _parse_values(args.values)
    param = args.param
    tag = parse_noise_arg(args.noise) if args.noise else None

    if param in ("T", "n") and os.path.exists(raw):
        raise InputError(f"sweeping {param} requires a builtin model, not a file")
    if param == "eta_x" and (tag is None or tag[0] != "biased"):
        raise InputError("sweeping eta_x needs --noise biased:p=...")
    if param == "sigma" and (tag is None or tag[0] != "overrot"):
        raise InputError("sweeping sigma needs --noise overrot:sigma=...")
    if param == "gamma" and which != "schedule":
        raise InputError("sweeping gamma applies to schedules")
    if param in ("eta_x", "sigma") and which != "circuit":
        raise InputError(f"sweeping {param} applies to circuits")

    rows = []
    for v in values:
        point_raw, point_tag = raw, tag
        if param in ("T", "n"):
            point_raw = _spliced_model(raw, param, v)
        obj, _, _ = _load_entry(point_raw, which)
        if param == "eta_x":
            point_tag = ("biased", dataclasses.replace(tag[1], eta_x=v))
        elif param == "sigma":
            point_tag = ("overrot", dataclasses.replace(tag[1], sigma=v))
        if which == "circuit":
            circ = _apply_digital_noise(obj, point_tag)
            value = fragility_avg(circ).value
            budget = float(_gate_budget(circ))
        else:
            if param == "gamma":
                noise = AnalogNoise(v, None)
            else:
                noise = _resolve_analog_noise(obj, point_tag)
            value = fragility_analog(obj, noise).value
            budget = obj.runtime
        rows.append([v, value, budget, budget * value])

    header = [param, "fragility", "budget", "budget_fragility"]
    if args.out:
        serialize.write_csv(args.out, header, rows)
        print(f"wrote {args.out}")
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(serialize.format_float(x) for x in row))
    return 0


# ---------------------------------------------------------------------------
# tradeoff
# ---------------------------------------------------------------------------

def run_tradeoff(args) -> int:
    obj, name, which, text = _single_input(args)
    tag = parse_noise_arg(args.noise) if args.noise else None
    if which == "circuit":
        circuit = _apply_digital_noise(obj, tag)
        verdict = check_tradeoff_digital(circuit)
    else:
        verdict = check_tradeoff_analog(obj, _resolve_analog_noise(obj, tag))
    print(f"{which} {name}")
    print(f"  lhs   = {verdict.lhs:.12g}")
    print(f"  rhs   = {verdict.rhs:.12g}")
    print(f"  slack = {verdict.slack:.12g}")
    print(f"  holds: {'yes' if verdict.holds else 'no'}")
    if args.out:
        inputs = {which: text}
        noise_doc = _noise_text(tag)
        if noise_doc is not None:
            inputs["noise"] = noise_doc
        payload = {
            "command": "tradeoff",
            "object": which,
            "name": name,
            "verdict": verdict.to_dict(),
        }
        serialize.dump_json(serialize.make_report(payload, inputs), args.out)
        print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# repro
# ---------------------------------------------------------------------------

def _check_rel(name: str, measured: float, expected: float, tol: float) -> dict:
    err = abs(measured - expected) / max(abs(expected), 1e-300)
    return {
        "name": name, "measured": float(measured), "expected": float(expected),
        "tolerance": tol, "mode": "rel", "passed": bool(err <= tol),
    }


def _check_abs(name: str, measured: float, expected: float, tol: float) -> dict:
    return {
        "name": name, "measured": float(measured), "expected": float(expected),
        "tolerance": tol, "mode": "abs", "passed": bool(abs(measured - expected) <= tol),
    }


def _check_that(name: str, passed: bool, detail: str) -> dict:
    return {
        "name": name, "detail": detail, "mode": "structural",
        "passed": bool(passed),
    }


def _repro_flip_forms():
    expected = {
        ("a", "q_i"): math.pi / 4.0,
        ("a", "q_ii"): 5.0 * math.pi / 64.0,
        ("b", "q_i"): 5.0 * math.pi / 8.0,
        ("b", "q_ii"): 15.0 * math.pi / 128.0 - 1.0 / 6.0,
    }
    ops = flip_noise_ops()
    rows, checks = [], []
    for form in ("a", "b"):
        schedule = build_flip_example(form)
        for op_name in ("q_i", "q_ii"):
            value = fragility_analog(
                schedule, AnalogNoise(1.0, ops[op_name]), rtol=1e-9
            ).value
            exp = expected[(form, op_name)]
            rows.append([form, op_name, value, exp])
            checks.append(_check_rel(f"flip-{form}-{op_name}", value, exp, 1e-6))
    return {"flip_forms.csv": (["form", "noise_op", "measured", "expected"], rows)}, checks


def _repro_code_bias():
    p = 2e-4  # per-site variance scale is p/2
    etas = [0.0, 0.25, 0.5, 0.75, 1.0]
    rows, values = [], {}
    for code in ("planar-d2", "xzzx-d2"):
        base = build_model(code)
        for eta in etas:
            noisy = attach_biased_noise(base, BiasedNoiseSpec(p, eta))
            v = fragility_avg(noisy).value / (p / 2.0)
            values[(code, eta)] = v
            rows.append([code, eta, v])
    vp0, vp1 = values[("planar-d2", 0.0)], values[("planar-d2", 1.0)]
    vx0, vx1 = values[("xzzx-d2", 0.0)], values[("xzzx-d2", 1.0)]
    checks = [
        _check_rel("planar-x-weight", vp1, 40.0, 1e-9),
        _check_rel("planar-z-weight", vp0, 31.0, 1e-9),
        _check_rel("xzzx-x-weight", vx1, 32.0, 1e-9),
        _check_rel("xzzx-z-weight", vx0, 39.0, 1e-9),
        _check_abs(
            "codes-agree-at-eta-half",
            values[("planar-d2", 0.5)] - values[("xzzx-d2", 0.5)], 0.0, 1e-9,
        ),
        _check_rel("z-bias-planar-advantage", (vx0 - vp0) / vx0, 8.0 / 39.0, 1e-12),
    ]
    return {"code_bias.csv": (["code", "eta_x", "fragility_per_variance"], rows)}, checks


_ANNEAL_GRID = (1, 2, 3, 5, 8, 12, 20, 30, 50, 80, 120, 200)
_ANNEAL_REFERENCE = {
    1: 0.184, 2: 0.348, 3: 0.489, 5: 0.759, 8: 0.796, 12: 0.386,
    20: 0.251, 30: 0.075, 50: 0.046, 80: 0.029, 120: 0.019, 200: 0.012,
}
_BANGBANG_FRAGILITY = 9.162978572970228


def _repro_anneal_runtime():
    model = PSpinModel(3, 3)
    noise = AnalogNoise(1.0, None)
    bb = fragility_analog(pspin_bangbang_schedule(model), noise, rtol=1e-9).value
    rows, checks = [], []
    checks.append(_check_rel("bangbang-fragility", bb, _BANGBANG_FRAGILITY, 1e-6))
    values = {}
    for T in _ANNEAL_GRID:
        v = fragility_analog(
            pspin_adiabatic_schedule(model, float(T)), noise, rtol=1e-7
        ).value
        values[T] = v
        rows.append([T, v, _ANNEAL_REFERENCE[T]])
        checks.append(_check_abs(f"anneal-T{T}", v, _ANNEAL_REFERENCE[T], 6e-4))
    peak = max(values, key=values.get)
    checks.append(_check_that("anneal-peak-at-T8", peak == 8, f"peak at T={peak}"))
    checks.append(
        _check_that(
            "anneal-below-bangbang",
            all(v < bb for v in values.values()),
            f"max anneal {max(values.values()):.6g} vs bang-bang {bb:.6g}",
        )
    )
    return {"anneal_runtime.csv": (["T", "fragility", "reference"], rows)}, checks


_PATH_L2_REFERENCE = {
    3: 143.640679, 5: 842.149747, 7: 2541.195943, 9: 5684.892135, 11: 10717.366598,
}


def _repro_path_scaling():
    ns = (3, 5, 7, 9, 11)
    rows, checks = [], []
    l2 = {}
    for n in ns:
        model = PSpinModel(n, 3)
        closed = pspin_path_length_closed(model)
        digital = path_length_digital(pspin_bangbang(model), mode="over_rotation")
        l2[n] = closed * closed
        rows.append([n, closed, l2[n], digital])
        checks.append(_check_rel(f"path-closed-vs-digital-n{n}", digital, closed, 1e-9))
        checks.append(_check_rel(f"path-l2-n{n}", l2[n], _PATH_L2_REFERENCE[n], 1e-6))
    logs_n = np.log(np.array(ns, dtype=float))
    logs_l2 = np.log(np.array([l2[n] for n in ns]))
    slope = float(np.polyfit(logs_n, logs_l2, 1)[0])
    checks.append(_check_rel("path-l2-slope", slope, 3.318380, 1e-3))
    checks.append(
        _check_abs("path-l2-slope-near-cubic", slope, 3.0, 0.2)
    )
    return {
        "path_scaling.csv": (["n", "path_length", "path_length_sq", "digital"], rows)
    }, checks


def _rotation_chain() -> Circuit:
    """Small deterministic rotation circuit with per-gate over-rotation."""
    from resil.circuit import Gate, Layer

    layers = [
        Layer([Gate.rx(0, 0.7), Gate.rz(1, 0.4)]),
        Layer([Gate.ry(2, 0.9), Gate.rz(0, 0.5)]),
        Layer([Gate.rx(1, 0.6), Gate.ry(0, 0.3)]),
    ]
    circuit = Circuit(3, layers)
    return attach_overrotation_noise(circuit, AngleDistribution("two_point", 0.01))


def _repro_tradeoffs():
    rows, checks = [], []

    def add(name: str, kind: str, verdict):
        rows.append([name, kind, verdict.lhs, verdict.rhs, verdict.slack, verdict.holds])
        checks.append(
            _check_that(
                f"tradeoff-{name}", verdict.holds,
                f"lhs={verdict.lhs:.6g} rhs={verdict.rhs:.6g}",
            )
        )
        return verdict

    # Bang-bang schedule: runtime bound nearly saturated (ratio just above 1).
    v = add(
        "pspin-bangbang", "analog",
        check_tradeoff_analog(
            pspin_bangbang_schedule(PSpinModel(3, 3)), AnalogNoise(1.0, None)
        ),
    )
    checks.append(
        _check_rel("tradeoff-pspin-ratio", v.lhs / v.rhs, 1.0020262485719345, 1e-6)
    )

    ops = flip_noise_ops()
    for form in ("a", "b"):
        schedule = build_flip_example(form)
        for op_name in ("q_i", "q_ii"):
            v = add(
                f"flip-{form}-{op_name}", "analog",
                check_tradeoff_analog(schedule, AnalogNoise(1.0, ops[op_name])),
            )
            if form == "a" and op_name == "q_i":
                checks.append(
                    _check_rel(
                        "tradeoff-flip-a-ratio", v.lhs / v.rhs,
                        math.pi * math.pi / 8.0, 1e-6,
                    )
                )

    add(
        "pspin-anneal-T10", "analog",
        check_tradeoff_analog(
            pspin_adiabatic_schedule(PSpinModel(3, 3), 10.0), AnalogNoise(1.0, None)
        ),
    )

    chain = _rotation_chain()
    add("rotation-chain", "digital", check_tradeoff_digital(chain))
    cost_op = (
        HermitianOperator.pauli(3, "Z", (0,))
        + HermitianOperator.pauli(3, "Z", (1,))
        + HermitianOperator.pauli(3, "Z", (2,))
    )
    add("rotation-chain-cost", "cost", check_tradeoff_cost(chain, cost_op))

    return {
        "tradeoffs.csv": (["name", "kind", "lhs", "rhs", "slack", "holds"], rows)
    }, checks


_REPRO_FUNCS = {
    "flip-forms": _repro_flip_forms,
    "code-bias": _repro_code_bias,
    "anneal-runtime": _repro_anneal_runtime,
    "path-scaling": _repro_path_scaling,
    "tradeoffs": _repro_tradeoffs,
}


def run_repro(args) -> int:
    targets = list(_REPRO_TARGETS) if args.target == "all" else [args.target]
    outdir = args.out or f"repro-{args.target}"
    os.makedirs(outdir, exist_ok=True)
    tables: dict = {}
    checks: list[dict] = []
    for target in targets:
        t, c = _REPRO_FUNCS[target]()
        tables.update(t)
        checks.extend(c)
    table_hashes = {}
    for filename, (header, rows) in tables.items():
        path = os.path.join(outdir, filename)
        serialize.write_csv(path, header, rows)
        with open(path, "rb") as fh:
            table_hashes[filename] = {"sha256": serialize.sha256_hex(fh.read())}
    lines = []
    for check in checks:
        status = "PASS" if check["passed"] else "FAIL"
        if check["mode"] == "structural":
            lines.append(f"{status} {check['name']}: {check['detail']}")
        else:
            lines.append(
                f"{status} {check['name']}: measured={check['measured']:.12g} "
                f"expected={check['expected']:.12g} tol={check['tolerance']:g} "
                f"({check['mode']})"
            )
    n_pass = sum(1 for c in checks if c["passed"])
    lines.append(f"{n_pass}/{len(checks)} checks passed")
    summary_text = "\n".join(lines) + "\n"
    with open(os.path.join(outdir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(summary_text)
    serialize.dump_json(
        {
            "schema_version": serialize.SCHEMA_VERSION,
            "target": args.target,
            "checks": checks,
            "all_passed": n_pass == len(checks),
            "tables": table_hashes,
        },
        os.path.join(outdir, "summary.json"),
    )
    print(summary_text, end="")
    print(f"wrote {outdir}/")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--circuit", action="append", default=[], metavar="SPEC",
        help="circuit JSON file or builtin model name[:k=v,...]",
    )
    p.add_argument(
        "--schedule", action="append", default=[], metavar="SPEC",
        help="schedule JSON file or builtin model name[:k=v,...]",
    )
    p.add_argument(
        "--noise", default=None, metavar="SPEC",
        help="biased:p=..., overrot:sigma=..., gamma:VALUE, or a JSON file",
    )
    p.add_argument("--workers", type=int, default=None, help="worker processes")
    p.add_argument("--out", default=None, help="output file (or directory for repro)")


def build_parser() -> _Parser:
    parser = _Parser(prog="resil", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("analyze", help="fragility of one circuit or schedule")
    _add_inputs(p)
    p.add_argument(
        "--method", default="avg",
        help="comma list of avg, perturbative, exact, mc, or all (default avg)",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument(
        "--statistic", default="bures", choices=("bures", "overlap", "fidelity"),
        help="statistic averaged by the mc method",
    )
    p.set_defaults(func=run_analyze)

    p = sub.add_parser("compare", help="rank compilations by averaged fragility")
    _add_inputs(p)
    p.set_defaults(func=run_compare)

    p = sub.add_parser("sweep", help="fragility across a parameter grid")
    _add_inputs(p)
    p.add_argument("--param", required=True, choices=_SWEEP_PARAMS)
    p.add_argument(
        "--values", required=True,
        help='grid: "a,b,c" or "start:stop:num"',
    )
    p.set_defaults(func=run_sweep)

    p = sub.add_parser("tradeoff", help="resilience-runtime lower-bound check")
    _add_inputs(p)
    p.set_defaults(func=run_tradeoff)

    p = sub.add_parser("repro", help="regenerate headline result tables")
    p.add_argument(
        "--target", default="all", choices=_REPRO_TARGETS + ("all",),
    )
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=run_repro)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except ResilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
