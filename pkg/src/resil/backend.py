"""Kernel backend selection and batched statevector helpers.

The single-state kernels (``apply_1q``, ``apply_2q``, ``apply_dense``,
``apply_pauli``, ``expect_pauli``) come from the compiled extension
``resil._kernels`` when it is importable and fall back to the pure NumPy
implementation in ``resil._kernels_py`` otherwise.  Set the environment
variable ``RESIL_BACKEND`` to ``cython`` or ``numpy`` before import to force
a choice (``cython`` raises if the extension is unavailable); any other
value, or no value, selects automatically.

Batched helpers (operating on a stack of statevectors at once) are pure
NumPy on every backend: their inner loop is already a vectorized matmul, so
the extension would add nothing.  Monte-Carlo paths use these.
"""

from __future__ import annotations

import os

import numpy as np

from resil import _kernels_py

__all__ = [
    "apply_1q",
    "apply_2q",
    "apply_dense",
    "apply_pauli",
    "expect_pauli",
    "backend_name",
    "HAVE_EXTENSION",
    "batch_apply_dense",
    "batch_apply_pauli",
    "batch_pauli_rotation",
    "batch_evolve_eigh",
]


def _select():
    choice = os.environ.get("RESIL_BACKEND", "auto").strip().lower()
    ext = None
    err = None
    try:
        from resil import _kernels as ext  # type: ignore[no-redef]
    except ImportError as exc:  # pragma: no cover - depends on build
        err = exc
    if choice == "numpy":
        return _kernels_py, ext is not None
    if choice == "cython":
        if ext is None:  # pragma: no cover - depends on build
            raise ImportError(
                "RESIL_BACKEND=cython but the compiled extension is not available"
            ) from err
        return ext, True
    return (ext if ext is not None else _kernels_py), ext is not None


_impl, HAVE_EXTENSION = _select()

apply_1q = _impl.apply_1q
apply_2q = _impl.apply_2q
apply_dense = _impl.apply_dense
apply_pauli = _impl.apply_pauli
expect_pauli = _impl.expect_pauli


def backend_name() -> str:
    """Name of the active single-state kernel backend."""
    return _impl.BACKEND_NAME


# ---------------------------------------------------------------------------
# Batched helpers (sample axis first, amplitude axis last).
# ---------------------------------------------------------------------------

def batch_apply_dense(states: np.ndarray, u: np.ndarray, qubits: tuple[int, ...]) -> np.ndarray:
    """Apply a 2**k x 2**k matrix to ``qubits`` of every row of ``states``.

    ``states`` has shape (S, dim); a new array is returned.
    """
    rows = _kernels_py._subspace_rows(states.shape[1], tuple(qubits))
    out = states.copy()
    out[:, rows] = np.matmul(u, states[:, rows])
    return out


def batch_apply_pauli(states: np.ndarray, xmask: int, zmask: int, ny: int) -> np.ndarray:
    """Apply a Pauli string to every row of ``states``."""
    dim = states.shape[1]
    if zmask:
        out = states * _kernels_py._pauli_sign(dim, zmask)
        if xmask:
            out = out[:, _kernels_py._pauli_src(dim, xmask)]
    elif xmask:
        out = states[:, _kernels_py._pauli_src(dim, xmask)]
    else:
        out = states.copy()
    k = ny & 3
    if k:
        out = out * (1j) ** k
    return out


def batch_pauli_rotation(
    states: np.ndarray,
    angles: np.ndarray,
    coeff: float,
    xmask: int,
    zmask: int,
    ny: int,
) -> np.ndarray:
    """Apply ``exp(-i * angles[s] * coeff * P)`` to each row ``s``.

    ``P`` is the unit Pauli string ``(xmask, zmask, ny)``; since ``P**2 = I``
    the rotation is ``cos(a c) I - i sin(a c) P`` rowwise.
    """
    theta = np.asarray(angles, dtype=float) * coeff
    c = np.cos(theta)[:, None]
    s = np.sin(theta)[:, None]
    return c * states - 1j * s * batch_apply_pauli(states, xmask, zmask, ny)


def batch_evolve_eigh(
    states: np.ndarray,
    eigvals: np.ndarray,
    eigvecs: np.ndarray,
    angles: np.ndarray,
    qubits: tuple[int, ...],
) -> np.ndarray:
    """Apply ``exp(-i * angles[s] * H)`` on ``qubits`` of each row ``s``.

    ``H`` is given by its local eigendecomposition ``(eigvals, eigvecs)``
    over ``qubits`` (qubits[0] = local LSB).
    """
    rows = _kernels_py._subspace_rows(states.shape[1], tuple(qubits))
    block = states[:, rows]                                   # (S, 2**k, R)
    coords = np.matmul(eigvecs.conj().T, block)               # eigenbasis
    phases = np.exp(-1j * np.asarray(angles, float)[:, None] * eigvals)
    coords *= phases[:, :, None]
    out = states.copy()
    out[:, rows] = np.matmul(eigvecs, coords)
    return out
