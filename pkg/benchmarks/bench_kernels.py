"""Benchmark the compiled statevector kernels against the NumPy fallback.

Times the four hot kernels (``apply_1q``, ``apply_2q``, ``apply_pauli``,
``apply_dense``) on statevectors of 4 to 10 qubits for both backends, then
an end-to-end noisy-circuit fragility computation run once per backend in a
subprocess (backend selection happens at import time via ``RESIL_BACKEND``).

Run as::

    python3 benchmarks/bench_kernels.py

Pass ``--quick`` to shrink the timing budget for smoke runs.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

import resil._kernels_py as kpy

try:
    import resil._kernels as kcy
except ImportError:  # pragma: no cover - extension not built
    kcy = None

_QUBIT_RANGE = range(4, 11)

_END_TO_END = """
import time
import numpy as np
import resil
from resil import backend
from resil.models import brickwork_circuit, random_pauli_sites

circuit = random_pauli_sites(brickwork_circuit(8, 24, seed=3), seed=5, sigma=0.01)
angles = np.full(circuit.num_noise_sites, 0.01)
t0 = time.perf_counter()
report = resil.fragility_perturbative(circuit, angles)
avg = resil.fragility_avg(circuit)
elapsed = time.perf_counter() - t0
print(f"{backend.backend_name()} {elapsed:.6f} {report.value:.15g} {avg.value:.15g}")
"""


def _time_call(fn, args: tuple, budget: float) -> float:
    """Best per-call seconds for fn(*args) within roughly ``budget`` seconds."""
    fn(*args)  # warm caches, exclude one-time setup from timing
    n = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(n):
            fn(*args)
        dt = time.perf_counter() - t0
        if dt >= budget / 5.0:
            break
        n *= 4
    best = dt / n
    for _ in range(2):
        t0 = time.perf_counter()
        for _ in range(n):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / n)
    return best


def _workloads(n_qubits: int, rng: np.random.Generator):
    """Yield (kernel_name, args_builder) pairs for one statevector size."""
    dim = 1 << n_qubits
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    u2 = _haar(2, rng)
    u4 = _haar(4, rng)
    u8 = _haar(8, rng)
    mid = n_qubits // 2
    xmask = (1 << n_qubits) - 1
    zmask = sum(1 << q for q in range(0, n_qubits, 2))
    return [
        ("apply_1q", (psi, u2, mid)),
        ("apply_2q", (psi, u4, 0, n_qubits - 1)),
        ("apply_pauli", (psi, xmask, zmask, 2)),
        ("apply_dense", (psi, u8, (0, mid, n_qubits - 1))),
    ]


def _haar(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def bench_kernels(budget: float) -> None:
    rng = np.random.default_rng(2024)
    header = f"{'kernel':<12} {'qubits':>6} {'numpy':>12} {'cython':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n_qubits in _QUBIT_RANGE:
        for name, args in _workloads(n_qubits, rng):
            t_py = _time_call(getattr(kpy, name), args, budget)
            if kcy is not None:
                t_cy = _time_call(getattr(kcy, name), args, budget)
                out_py = getattr(kpy, name)(*args)
                out_cy = getattr(kcy, name)(*args)
                if not np.allclose(out_py, out_cy, atol=1e-12):
                    raise AssertionError(f"backend mismatch in {name} at {n_qubits} qubits")
                ratio = f"{t_py / t_cy:7.2f}x"
                cy_col = _fmt(t_cy)
            else:
                ratio, cy_col = "     n/a", "         n/a"
            print(f"{name:<12} {n_qubits:>6} {_fmt(t_py):>12} {cy_col:>12} {ratio:>8}")


def _fmt(seconds: float) -> str:
    if seconds < 1e-3:
        return f"{seconds * 1e6:9.2f} us"
    return f"{seconds * 1e3:9.3f} ms"


def bench_end_to_end() -> None:
    print()
    print("end-to-end: perturbative + averaged fragility, 8-qubit depth-24 brickwork")
    rows = []
    for name in ("numpy", "cython") if kcy is not None else ("numpy",):
        env = dict(os.environ, RESIL_BACKEND=name)
        out = subprocess.run(
            [sys.executable, "-c", _END_TO_END], env=env, capture_output=True, text=True
        )
        if out.returncode != 0:
            raise RuntimeError(f"{name} run failed:\n{out.stderr}")
        backend, elapsed, value, avg = out.stdout.split()
        rows.append((backend, float(elapsed), value, avg))
    base = rows[0][1]
    for backend, elapsed, value, avg in rows:
        print(f"  {backend:<8} {elapsed:8.3f} s   F={value}  Fbar={avg}  ({base / elapsed:.2f}x)")
    if len(rows) == 2 and (rows[0][2] != rows[1][2] or rows[0][3] != rows[1][3]):
        raise AssertionError("backends disagree on fragility values")
    print("  (identical fragility values across backends)")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--quick", action="store_true", help="smaller timing budget")
    args = parser.parse_args()
    budget = 0.05 if args.quick else 0.25
    if kcy is None:
        print("note: compiled extension not importable; timing NumPy backend only\n")
    bench_kernels(budget)
    bench_end_to_end()


if __name__ == "__main__":
    main()
