"""Shared test utilities: independent dense oracles and random builders.

The dense constructions here deliberately avoid the package's own kernels
(element-wise index loops, explicit kron products) so that agreement with
them is a genuine cross-check rather than a tautology.
"""

from __future__ import annotations

import numpy as np

from resil.circuit import AngleDistribution, Circuit, Gate, Layer
from resil.core import HermitianOperator

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def random_state(rng: np.random.Generator, n_qubits: int) -> np.ndarray:
    dim = 1 << n_qubits
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def embed_unitary(u: np.ndarray, qubits: tuple[int, ...], n_qubits: int) -> np.ndarray:
    """Dense full-register embedding of a local matrix, built index by index.

    qubits[0] is the local least-significant bit; global qubit q is bit q of
    the amplitude index.
    """
    dim = 1 << n_qubits
    k = len(qubits)
    full = np.zeros((dim, dim), dtype=complex)
    clear = 0
    for q in qubits:
        clear |= 1 << q
    for col in range(dim):
        pat = 0
        for j, q in enumerate(qubits):
            pat |= ((col >> q) & 1) << j
        base = col & ~clear
        for row_pat in range(1 << k):
            row = base
            for j, q in enumerate(qubits):
                row |= ((row_pat >> j) & 1) << q
            full[row, col] = u[row_pat, pat]
    return full


def pauli_string_dense(letters: dict[int, str], n_qubits: int) -> np.ndarray:
    """Dense matrix of a Pauli string via explicit kron (qubit 0 = LSB)."""
    m = np.array([[1.0]], dtype=complex)
    for q in range(n_qubits):
        m = np.kron(PAULI[letters.get(q, "I")], m)
    return m


def operator_dense(op: HermitianOperator) -> np.ndarray:
    """Full dense matrix of an operator, built from kron products only."""
    dim = 1 << op.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for key, coeff in op.terms:
        out += coeff * pauli_string_dense(dict(key), op.n_qubits)
    return out


def random_pauli_sum(
    rng: np.random.Generator, n_qubits: int, n_terms: int
) -> HermitianOperator:
    terms = []
    for _ in range(n_terms):
        weight = int(rng.integers(1, n_qubits + 1))
        qubits = sorted(rng.choice(n_qubits, size=weight, replace=False).tolist())
        letters = [str(rng.choice(["X", "Y", "Z"])) for _ in qubits]
        terms.append((float(rng.normal()), tuple(zip(qubits, letters))))
    return HermitianOperator(n_qubits, terms)


def random_rotation_circuit(
    rng: np.random.Generator,
    n_qubits: int,
    depth: int,
    angle_low: float = 0.3,
    angle_high: float = 1.2,
    p_cx: float = 0.0,
) -> Circuit:
    """Layers of random single-qubit rotations, optionally with a CX."""
    layers = []
    for _ in range(depth):
        gates = []
        used: set[int] = set()
        if p_cx > 0.0 and n_qubits >= 2 and rng.random() < p_cx:
            c, t = rng.choice(n_qubits, size=2, replace=False)
            gates.append(Gate.cx(int(c), int(t)))
            used.update((int(c), int(t)))
        for q in range(n_qubits):
            if q in used:
                continue
            kind = ("rx", "ry", "rz")[int(rng.integers(3))]
            angle = float(rng.uniform(angle_low, angle_high))
            gates.append(getattr(Gate, kind)(q, angle))
        layers.append(Layer(gates))
    return Circuit(n_qubits, layers)


def overrotated(circuit: Circuit, sigma: float, kind: str = "two_point") -> Circuit:
    from resil.noise import attach_overrotation_noise

    return attach_overrotation_noise(circuit, AngleDistribution(kind, sigma))
