"""Dense statevector kernels, pure NumPy backend.

Conventions used across the package:

* Qubit 0 is the least-significant bit of the amplitude index, so basis
  state ``|q_{n-1} ... q_1 q_0>`` has index ``sum(q_j << j)``.
* A k-qubit gate matrix is indexed with the *first listed* qubit as the
  local least-significant bit: ``u[row, col]`` with
  ``row = sum(bit_j << j)`` where ``bit_j`` belongs to ``qubits[j]``.
* A Pauli string is encoded as ``(xmask, zmask, ny)`` with
  ``P = i**ny * X^xmask * Z^zmask`` (Z applied first), which keeps every
  string Hermitian when ``ny`` counts the Y factors.  Its action is
  ``(P psi)[j] = i**ny * (-1)**popcount((j ^ xmask) & zmask) * psi[j ^ xmask]``.

All kernels take 1-D ``complex128`` arrays, never mutate their inputs, and
return freshly allocated arrays.  The compiled extension in
``resil._kernels`` exposes the same call signatures.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "apply_1q",
    "apply_2q",
    "apply_dense",
    "apply_pauli",
    "expect_pauli",
    "BACKEND_NAME",
]

BACKEND_NAME = "numpy"

# Cached index helpers, keyed by (dim, qubits) / (dim, mask).  Dimensions in
# scope are <= 2**12, so these stay tiny.
_ROWS_CACHE: dict[tuple[int, tuple[int, ...]], np.ndarray] = {}
_SRC_CACHE: dict[tuple[int, int], np.ndarray] = {}
_SIGN_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _subspace_rows(dim: int, qubits: tuple[int, ...]) -> np.ndarray:
    """Row index table of shape (2**k, dim // 2**k).

    ``rows[p]`` lists the amplitude indices whose bits at ``qubits`` spell
    the local pattern ``p`` (qubits[0] = pattern LSB), ordered consistently
    across patterns so that ``psi[rows]`` is a valid local-operator block.
    """
    key = (dim, qubits)
    rows = _ROWS_CACHE.get(key)
    if rows is None:
        idx = np.arange(dim)
        mask = np.ones(dim, dtype=bool)
        for q in qubits:
            mask &= ((idx >> q) & 1) == 0
        base = idx[mask]
        offsets = [
            sum(((p >> j) & 1) << q for j, q in enumerate(qubits))
            for p in range(1 << len(qubits))
        ]
        rows = np.stack([base + off for off in offsets])
        rows.setflags(write=False)
        _ROWS_CACHE[key] = rows
    return rows


def _pauli_src(dim: int, xmask: int) -> np.ndarray:
    key = (dim, xmask)
    src = _SRC_CACHE.get(key)
    if src is None:
        src = np.arange(dim) ^ xmask
        src.setflags(write=False)
        _SRC_CACHE[key] = src
    return src


def _pauli_sign(dim: int, zmask: int) -> np.ndarray:
    """Vector of (-1)**popcount(i & zmask) over source indices i."""
    key = (dim, zmask)
    sign = _SIGN_CACHE.get(key)
    if sign is None:
        parity = np.zeros(dim, dtype=np.int64)
        idx = np.arange(dim)
        m = zmask
        while m:
            q = (m & -m).bit_length() - 1
            parity ^= (idx >> q) & 1
            m &= m - 1
        sign = 1.0 - 2.0 * parity
        sign.setflags(write=False)
        _SIGN_CACHE[key] = sign
    return sign


def apply_1q(psi: np.ndarray, u: np.ndarray, q: int) -> np.ndarray:
    """Apply a 2x2 matrix to qubit ``q``."""
    dim = psi.shape[0]
    m = psi.reshape(dim >> (q + 1), 2, 1 << q)
    a = m[:, 0, :]
    b = m[:, 1, :]
    out = np.empty_like(m)
    out[:, 0, :] = u[0, 0] * a + u[0, 1] * b
    out[:, 1, :] = u[1, 0] * a + u[1, 1] * b
    return out.reshape(dim)


def apply_2q(psi: np.ndarray, u: np.ndarray, q0: int, q1: int) -> np.ndarray:
    """Apply a 4x4 matrix to qubits ``(q0, q1)`` with ``q0`` the local LSB."""
    return apply_dense(psi, u, (q0, q1))


def apply_dense(psi: np.ndarray, u: np.ndarray, qubits: tuple[int, ...]) -> np.ndarray:
    """Apply a 2**k x 2**k matrix to ``qubits`` (qubits[0] = local LSB)."""
    if len(qubits) == 1:
        return apply_1q(psi, u, qubits[0])
    rows = _subspace_rows(psi.shape[0], tuple(qubits))
    out = psi.copy()
    out[rows] = u @ psi[rows]
    return out


def apply_pauli(psi: np.ndarray, xmask: int, zmask: int, ny: int) -> np.ndarray:
    """Apply the Pauli string ``i**ny * X^xmask * Z^zmask``."""
    dim = psi.shape[0]
    if zmask:
        out = psi * _pauli_sign(dim, zmask)
        if xmask:
            out = out[_pauli_src(dim, xmask)]
    elif xmask:
        out = psi[_pauli_src(dim, xmask)]
    else:
        out = psi.copy()
    k = ny & 3
    if k:
        out = out * (1j) ** k
    return out


def expect_pauli(psi: np.ndarray, xmask: int, zmask: int, ny: int) -> complex:
    """Return <psi| i**ny X^xmask Z^zmask |psi>."""
    return complex(np.vdot(psi, apply_pauli(psi, xmask, zmask, ny)))
