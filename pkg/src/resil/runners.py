"""Deterministic Monte-Carlo execution over noise realizations.

Per-sample values depend only on the sample index and seed (see
``resil.noise`` for the counter-based generator contract), and summaries
are single reductions over the index-ordered value array, so results are
bitwise identical across chunk sizes and worker counts.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from resil import backend
from resil.circuit import Circuit, _trajectory_arrays
from resil.core import HermitianOperator, InputError
from resil.noise import sample_angle_matrix

__all__ = ["resolve_workers", "mc_values", "summarize"]

_CHUNK = 2048

_VALUE_KINDS = ("bures", "overlap", "fidelity", "cost")


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: the argument, else $RESIL_WORKERS, else 1."""
    if workers is None:
        env = os.environ.get("RESIL_WORKERS", "").strip()
        workers = int(env) if env else 1
    workers = int(workers)
    if workers < 1:
        raise InputError(f"workers must be >= 1, got {workers}")
    return workers


def _batch_gate(states: np.ndarray, gate, n_qubits: int) -> np.ndarray:
    if gate.unitary is not None or len(gate.qubits) <= 3:
        return backend.batch_apply_dense(states, gate.local_unitary(), gate.qubits)
    out = np.empty_like(states)
    for i in range(states.shape[0]):
        out[i] = gate.apply_vec(states[i], n_qubits)
    return out


def _noisy_final_states(circuit: Circuit, psi0, angles: np.ndarray) -> np.ndarray:
    """Propagate a batch of realizations; angles has shape (count, n_sites)."""
    count = angles.shape[0]
    start = circuit.start_state(psi0).amplitudes
    states = np.tile(start, (count, 1))
    placed_by_layer: list[list] = [[] for _ in circuit.layers]
    for placed in circuit.noise_sites():
        placed_by_layer[placed.layer].append(placed)
    for li, layer in enumerate(circuit.layers):
        for gate in layer.gates:
            states = _batch_gate(states, gate, circuit.n_qubits)
        for placed in placed_by_layer[li]:
            deltas = angles[:, placed.ordinal]
            if np.any(deltas != 0.0):
                xm, zm, ny = placed.site.masks
                states = backend.batch_pauli_rotation(states, deltas, 1.0, xm, zm, ny)
    return states


def _run_chunk(task) -> np.ndarray:
    circuit, psi0, seed, start, count, kind, cost_op = task
    angles = sample_angle_matrix(circuit, seed, start, count)
    states = _noisy_final_states(circuit, psi0, angles)
    if kind == "cost":
        cpsi = cost_op.apply_batch(states)
        return np.einsum("ij,ij->i", states.conj(), cpsi).real
    ideal = _trajectory_arrays(circuit, psi0)[-1]
    f = np.abs(np.einsum("ij,j->i", states, ideal.conj()))
    if kind == "bures":
        return 2.0 * (1.0 - f)
    return f * f  # overlap / fidelity: |<ideal|noisy>|^2


def mc_values(
    circuit: Circuit,
    seed: int,
    samples: int,
    kind: str = "bures",
    *,
    cost_op: HermitianOperator | None = None,
    psi0=None,
    workers: int | None = None,
    chunk: int = _CHUNK,
) -> np.ndarray:
    """Per-sample Monte-Carlo values in sample-index order.

    Kinds: ``bures`` (2(1-|f|)) and ``overlap``/``fidelity`` (synonyms,
    |f|^2) with f the overlap against the noise-free final state, and
    ``cost`` (<cost_op> in the noisy final state; requires ``cost_op``).
    """
    if kind not in _VALUE_KINDS:
        raise InputError(f"unknown value kind {kind!r}; choose from {_VALUE_KINDS}")
    if kind == "cost" and cost_op is None:
        raise InputError("kind='cost' needs a cost_op")
    samples = int(samples)
    if samples < 1:
        raise InputError("samples must be >= 1")
    workers = resolve_workers(workers)
    tasks = [
        (circuit, psi0, int(seed), start, min(chunk, samples - start), kind, cost_op)
        for start in range(0, samples, chunk)
    ]
    values = np.empty(samples, dtype=np.float64)
    if workers == 1 or len(tasks) == 1:
        for task in tasks:
            values[task[3] : task[3] + task[4]] = _run_chunk(task)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for task, result in zip(tasks, pool.map(_run_chunk, tasks)):
                values[task[3] : task[3] + task[4]] = result
    return values


def summarize(values: np.ndarray) -> tuple[float, float]:
    """Mean and standard error via single fixed-order reductions."""
    n = values.shape[0]
    mean = float(np.add.reduce(values) / n)
    if n < 2:
        return mean, float("inf")
    var = float(np.add.reduce((values - mean) ** 2) / (n - 1))
    return mean, math.sqrt(var / n)
