"""Statevector core: states, Hermitian operators, expectations, exact gates.

Conventions (shared package-wide, see also ``resil.backend``):

* Qubit 0 is the least-significant bit of the amplitude index.
* Operators are real-weighted sums of Pauli strings; every term is stored
  as ``(coefficient, ((qubit, letter), ...))`` with letters in ``XYZ`` and
  qubits strictly increasing.  The empty string is the identity.
* ``exp(-i * angle * H)`` is evaluated exactly: diagonal operators by phase
  multiplication, single Pauli strings by the cos/sin rotation identity,
  mutually commuting sums term-by-term, and everything else through an
  eigendecomposition restricted to the operator's support.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from resil import backend

__all__ = [
    "ResilError",
    "InputError",
    "SchemaError",
    "NumericalError",
    "StateVector",
    "HermitianOperator",
    "DensityMatrix",
    "apply_gate",
    "expectation",
    "variance",
    "covariance",
]

_LETTERS = ("X", "Y", "Z")

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class ResilError(Exception):
    """Base class for package errors."""


class InputError(ResilError):
    """Invalid user input: bad arguments, malformed documents, bad files."""


class SchemaError(InputError):
    """Document schema violation; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class NumericalError(ResilError):
    """Numerical failure: non-convergence, instability, size guards."""


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

class StateVector:
    """Immutable n-qubit pure state."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, n_qubits: int, amplitudes, *, copy: bool = True):
        arr = np.asarray(amplitudes, dtype=np.complex128)
        if arr.shape != (1 << n_qubits,):
            raise InputError(
                f"statevector for {n_qubits} qubits needs {1 << n_qubits} "
                f"amplitudes, got shape {arr.shape}"
            )
        if copy:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "n_qubits", n_qubits)
        object.__setattr__(self, "amplitudes", arr)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("StateVector is immutable")

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"

    def __reduce__(self):
        return (StateVector, (self.n_qubits, np.asarray(self.amplitudes)))

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        """Computational basis state |index>."""
        if not 0 <= index < (1 << n_qubits):
            raise InputError(f"basis index {index} out of range for {n_qubits} qubits")
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n_qubits, amps, copy=False)

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        """All-zeros state |0...0>."""
        return cls.basis(n_qubits, 0)

    @classmethod
    def plus(cls, n_qubits: int) -> "StateVector":
        """Uniform superposition |+>^n."""
        dim = 1 << n_qubits
        amps = np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128)
        return cls(n_qubits, amps, copy=False)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise InputError("cannot normalize the zero vector")
        return StateVector(self.n_qubits, self.amplitudes / nrm, copy=False)

    def overlap(self, other: "StateVector") -> complex:
        """Inner product <self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.overlap(other)) ** 2


# ---------------------------------------------------------------------------
# Hermitian operators
# ---------------------------------------------------------------------------

def _canonical_terms(n_qubits: int, terms) -> tuple:
    merged: dict[tuple, float] = {}
    for entry in terms:
        coeff, paulis = entry
        if isinstance(paulis, Mapping):
            items = paulis.items()
        else:
            items = paulis
        key = []
        for q, letter in items:
            q = int(q)
            letter = str(letter).upper()
            if not 0 <= q < n_qubits:
                raise InputError(f"operator qubit {q} out of range (n={n_qubits})")
            if letter == "I":
                continue
            if letter not in _LETTERS:
                raise InputError(f"unknown Pauli letter {letter!r}")
            key.append((q, letter))
        key.sort()
        if len({q for q, _ in key}) != len(key):
            raise InputError(f"repeated qubit in Pauli term {key}")
        coeff = complex(coeff)
        if abs(coeff.imag) > 1e-12 * max(1.0, abs(coeff.real)):
            raise InputError(f"non-real Pauli coefficient {coeff}")
        k = tuple(key)
        merged[k] = merged.get(k, 0.0) + coeff.real
    return tuple(sorted((k, c) for k, c in merged.items() if c != 0.0))


def _term_masks(key: tuple) -> tuple[int, int, int]:
    xm = zm = ny = 0
    for q, letter in key:
        if letter == "X":
            xm |= 1 << q
        elif letter == "Z":
            zm |= 1 << q
        else:  # Y
            xm |= 1 << q
            zm |= 1 << q
            ny += 1
    return xm, zm, ny


class HermitianOperator:
    """Real-weighted sum of Pauli strings on an n-qubit register."""

    __slots__ = ("n_qubits", "_terms", "_masks", "_cache")

    def __init__(self, n_qubits: int, terms: Iterable):
        self.n_qubits = int(n_qubits)
        if self.n_qubits < 1:
            raise InputError("operator needs at least one qubit")
        canonical = _canonical_terms(self.n_qubits, terms)
        self._terms = canonical
        self._masks = tuple(_term_masks(key) for key, _ in canonical)
        self._cache: dict = {}

    # -- construction -------------------------------------------------------

    @classmethod
    def pauli(
        cls,
        n_qubits: int,
        string: str,
        qubits: Sequence[int] | None = None,
        coeff: float = 1.0,
    ) -> "HermitianOperator":
        """Single Pauli-string operator, e.g. ``pauli(2, "XX")``.

        ``string[j]`` acts on ``qubits[j]`` (default ``qubits = 0..len-1``).
        """
        if qubits is None:
            qubits = tuple(range(len(string)))
        if len(qubits) != len(string):
            raise InputError("pauli string and qubit list lengths differ")
        return cls(n_qubits, [(coeff, tuple(zip(qubits, string.upper())))])

    @classmethod
    def identity(cls, n_qubits: int, coeff: float = 1.0) -> "HermitianOperator":
        return cls(n_qubits, [(coeff, ())])

    @classmethod
    def from_dense(
        cls,
        matrix,
        qubits: Sequence[int],
        n_qubits: int,
        tol: float = 1e-12,
    ) -> "HermitianOperator":
        """Pauli-decompose a dense Hermitian matrix acting on ``qubits``.

        ``qubits[0]`` is the local LSB of ``matrix``.  Raises
        :class:`InputError` when the matrix is not Hermitian within ``tol``.
        """
        m = np.asarray(matrix, dtype=np.complex128)
        k = len(qubits)
        if m.shape != (1 << k, 1 << k):
            raise InputError(f"matrix shape {m.shape} does not match {k} qubits")
        if np.max(np.abs(m - m.conj().T)) > tol * max(1.0, np.max(np.abs(m))):
            raise InputError("matrix is not Hermitian")
        dim = 1 << k
        idx = np.arange(dim)
        scale = np.max(np.abs(m)) or 1.0
        terms = []
        for x in range(dim):
            rows = idx ^ x
            gathered = m[rows, idx]
            for z in range(dim):
                sign = _kernel_sign(dim, z)
                ny = int(bin(x & z).count("1"))
                c = (-1j) ** ny * np.dot(sign, gathered) / dim
                if abs(c) <= tol * scale:
                    continue
                if abs(c.imag) > tol * scale:
                    raise InputError("matrix is not Hermitian (complex Pauli weight)")
                key = []
                for j in range(k):
                    xb = (x >> j) & 1
                    zb = (z >> j) & 1
                    if xb or zb:
                        letter = "Y" if (xb and zb) else ("X" if xb else "Z")
                        key.append((qubits[j], letter))
                terms.append((c.real, tuple(key)))
        return cls(n_qubits, terms)

    # -- bookkeeping --------------------------------------------------------

    @property
    def terms(self) -> tuple:
        """Canonical ``((qubit, letter) pairs, coefficient)`` tuples."""
        return self._terms

    @property
    def support(self) -> tuple[int, ...]:
        sup: set[int] = set()
        for key, _ in self._terms:
            sup.update(q for q, _ in key)
        return tuple(sorted(sup))

    @property
    def is_diagonal(self) -> bool:
        return all(xm == 0 for xm, _, _ in self._masks)

    def norm_bound(self) -> float:
        """Upper bound on the operator norm (sum of |coefficients|)."""
        return float(sum(abs(c) for _, c in self._terms))

    def commutes_with(self, other: "HermitianOperator") -> bool:
        for xm1, zm1, _ in self._masks:
            for xm2, zm2, _ in other._masks:
                if (bin(xm1 & zm2).count("1") + bin(zm1 & xm2).count("1")) % 2:
                    return False
        return True

    def _mutually_commuting(self) -> bool:
        val = self._cache.get("commuting")
        if val is None:
            val = True
            masks = self._masks
            for i in range(len(masks)):
                x1, z1, _ = masks[i]
                for j in range(i + 1, len(masks)):
                    x2, z2, _ = masks[j]
                    if (bin(x1 & z2).count("1") + bin(z1 & x2).count("1")) % 2:
                        val = False
                        break
                if not val:
                    break
            self._cache["commuting"] = val
        return val

    def __repr__(self) -> str:
        parts = []
        for key, c in self._terms[:4]:
            label = "".join(f"{letter}{q}" for q, letter in key) or "I"
            parts.append(f"{c:+.4g}*{label}")
        more = "..." if len(self._terms) > 4 else ""
        return f"HermitianOperator({self.n_qubits}q, {' '.join(parts)}{more})"

    def __reduce__(self):
        return (HermitianOperator, (self.n_qubits, tuple((c, k) for k, c in self._terms)))

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        if self.n_qubits != other.n_qubits:
            raise InputError("operator sizes differ")
        return HermitianOperator(
            self.n_qubits,
            [(c, k) for k, c in self._terms] + [(c, k) for k, c in other._terms],
        )

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        return self + (-1.0) * other

    def __rmul__(self, scalar: float) -> "HermitianOperator":
        return HermitianOperator(self.n_qubits, [(scalar * c, k) for k, c in self._terms])

    __mul__ = __rmul__

    def __neg__(self) -> "HermitianOperator":
        return (-1.0) * self

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HermitianOperator)
            and self.n_qubits == other.n_qubits
            and self._terms == other._terms
        )

    def __hash__(self):
        return hash((self.n_qubits, self._terms))

    # -- dense forms --------------------------------------------------------

    def local_matrix(self, qubits: Sequence[int] | None = None) -> np.ndarray:
        """Dense matrix over ``qubits`` (default: the operator support).

        ``qubits[0]`` is the local LSB.  Every term must act within
        ``qubits``.
        """
        if qubits is None:
            qubits = self.support or (min(self.n_qubits - 1, 0),)
        qubits = tuple(qubits)
        pos = {q: j for j, q in enumerate(qubits)}
        k = len(qubits)
        out = np.zeros((1 << k, 1 << k), dtype=np.complex128)
        for key, c in self._terms:
            ops = ["I"] * k
            for q, letter in key:
                if q not in pos:
                    raise InputError(f"term acts on qubit {q} outside {qubits}")
                ops[pos[q]] = letter
            m = np.array([[c]], dtype=np.complex128)
            for j in range(k):  # qubit order: qubits[0] = LSB => kron from the left
                m = np.kron(PAULI_MATRICES[ops[j]], m)
            out += m
        return out

    def full_matrix(self) -> np.ndarray:
        """Dense matrix over the whole register (guarded to n <= 10)."""
        if self.n_qubits > 10:
            raise NumericalError(
                f"refusing to build a dense {self.n_qubits}-qubit matrix"
            )
        return self.local_matrix(tuple(range(self.n_qubits)))

    def diagonal_vector(self, dim: int | None = None) -> np.ndarray:
        """Real diagonal of a diagonal operator over the full register."""
        if not self.is_diagonal:
            raise InputError("operator is not diagonal")
        dim = dim or (1 << self.n_qubits)
        key = ("diag", dim)
        d = self._cache.get(key)
        if d is None:
            d = np.zeros(dim)
            for (xm, zm, ny), (_, c) in zip(self._masks, self._terms):
                d += c * _kernel_sign(dim, zm)
            d.setflags(write=False)
            self._cache[key] = d
        return d

    # -- action on states ---------------------------------------------------

    def _apply_plan(self, dim: int):
        plan = self._cache.get(("plan", dim))
        if plan is None:
            diag = None
            offdiag = []
            for (xm, zm, ny), (_, c) in zip(self._masks, self._terms):
                if xm == 0:
                    v = c * _kernel_sign(dim, zm)
                    diag = v if diag is None else diag + v
                else:
                    phase = c * (1j) ** (ny & 3)
                    sign = _kernel_sign(dim, zm) if zm else None
                    src = _kernel_src(dim, xm)
                    offdiag.append((phase, src, sign))
            plan = (diag, tuple(offdiag))
            self._cache[("plan", dim)] = plan
        return plan

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Return ``H @ psi`` for a 1-D amplitude array."""
        diag, offdiag = self._apply_plan(psi.shape[0])
        out = diag * psi if diag is not None else np.zeros_like(psi)
        for phase, src, sign in offdiag:
            contrib = psi[src] if sign is None else (psi * sign)[src]
            out += phase * contrib
        return out

    def apply_batch(self, states: np.ndarray) -> np.ndarray:
        """Return ``H @ row`` for every row of a (S, dim) array."""
        diag, offdiag = self._apply_plan(states.shape[1])
        out = diag * states if diag is not None else np.zeros_like(states)
        for phase, src, sign in offdiag:
            contrib = states[:, src] if sign is None else (states * sign)[:, src]
            out += phase * contrib
        return out

    def expectation(self, state: "StateVector | np.ndarray") -> float:
        psi = state.amplitudes if isinstance(state, StateVector) else state
        return float(np.vdot(psi, self.apply(psi)).real)

    def variance(self, state: "StateVector | np.ndarray") -> float:
        """``<H^2> - <H>^2``, clamped at zero against roundoff."""
        psi = state.amplitudes if isinstance(state, StateVector) else state
        hpsi = self.apply(psi)
        mean = np.vdot(psi, hpsi).real
        v = np.vdot(hpsi, hpsi).real - mean * mean
        return max(0.0, float(v))

    def expectation_and_variance(self, psi: np.ndarray) -> tuple[float, float]:
        hpsi = self.apply(psi)
        mean = float(np.vdot(psi, hpsi).real)
        v = float(np.vdot(hpsi, hpsi).real) - mean * mean
        return mean, max(0.0, v)

    # -- exact evolution ----------------------------------------------------

    def _support_eig(self):
        eig = self._cache.get("eig")
        if eig is None:
            sup = self.support or (0,)
            if len(sup) > 10:
                raise NumericalError(
                    f"dense evolution over {len(sup)} qubits is not supported"
                )
            w, v = np.linalg.eigh(self.local_matrix(sup))
            eig = (sup, w, v)
            self._cache["eig"] = eig
        return eig

    def evolve_vec(self, psi: np.ndarray, angle: float) -> np.ndarray:
        """Return ``exp(-i * angle * H) @ psi`` exactly."""
        if angle == 0.0 or not self._terms:
            return psi.copy()
        dim = psi.shape[0]
        if self.is_diagonal:
            return psi * np.exp(-1j * angle * self.diagonal_vector(dim))
        if self._mutually_commuting():
            out = psi
            for (xm, zm, ny), (_, c) in zip(self._masks, self._terms):
                theta = angle * c
                if xm == 0 and zm == 0:
                    out = out * np.exp(-1j * theta)
                else:
                    ppsi = backend.apply_pauli(out, xm, zm, ny)
                    out = math.cos(theta) * out - 1j * math.sin(theta) * ppsi
            return out
        sup, w, v = self._support_eig()
        u = (v * np.exp(-1j * angle * w)) @ v.conj().T
        return backend.apply_dense(psi, u, sup)

    def evolve(self, state: StateVector, angle: float) -> StateVector:
        return StateVector(state.n_qubits, self.evolve_vec(state.amplitudes, angle), copy=False)


def _kernel_sign(dim: int, zmask: int) -> np.ndarray:
    from resil import _kernels_py

    return _kernels_py._pauli_sign(dim, zmask)


def _kernel_src(dim: int, xmask: int) -> np.ndarray:
    from resil import _kernels_py

    return _kernels_py._pauli_src(dim, xmask)


# ---------------------------------------------------------------------------
# Module-level convenience operations
# ---------------------------------------------------------------------------

def apply_gate(state: StateVector, generator: HermitianOperator, angle: float) -> StateVector:
    """Apply ``exp(-i * angle * generator)`` to ``state``."""
    return generator.evolve(state, angle)


def expectation(state: StateVector, op: HermitianOperator) -> float:
    """``<state| op |state>`` (real part; the value is real for Hermitian op)."""
    return op.expectation(state)


def variance(state: StateVector, op: HermitianOperator) -> float:
    """``<op^2> - <op>^2`` in ``state``, clamped at zero."""
    return op.variance(state)


def covariance(state: StateVector, a: HermitianOperator, b: HermitianOperator) -> float:
    """Symmetrized covariance ``Re<a psi|b psi> - <a><b>``."""
    psi = state.amplitudes
    apsi = a.apply(psi)
    bpsi = b.apply(psi)
    ma = np.vdot(psi, apsi).real
    mb = np.vdot(psi, bpsi).real
    return float(np.vdot(apsi, bpsi).real - ma * mb)


# ---------------------------------------------------------------------------
# Density matrices
# ---------------------------------------------------------------------------

class DensityMatrix:
    """Mixed state on a small register (guarded to n <= 6 qubits)."""

    __slots__ = ("n_qubits", "matrix")

    def __init__(self, n_qubits: int, matrix, *, copy: bool = True):
        if n_qubits > 6:
            raise InputError("DensityMatrix is limited to 6 qubits")
        dim = 1 << n_qubits
        m = np.asarray(matrix, dtype=np.complex128)
        if m.shape != (dim, dim):
            raise InputError(f"density matrix shape {m.shape} != ({dim}, {dim})")
        if copy:
            m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "n_qubits", n_qubits)
        object.__setattr__(self, "matrix", m)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("DensityMatrix is immutable")

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        psi = state.amplitudes
        return cls(state.n_qubits, np.outer(psi, psi.conj()), copy=False)

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        dim = 1 << n_qubits
        return cls(n_qubits, np.eye(dim, dtype=complex) / dim, copy=False)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def expectation(self, op: HermitianOperator) -> float:
        return float(np.trace(op.full_matrix() @ self.matrix).real)

    def fidelity_state(self, state: StateVector) -> float:
        psi = state.amplitudes
        return float(np.vdot(psi, self.matrix @ psi).real)

    def sandwich_unitary(self, u: np.ndarray, qubits: tuple[int, ...]) -> "DensityMatrix":
        """Return ``U rho U^dagger`` for a local unitary on ``qubits``."""
        # batch_apply_dense left-multiplies each row by the full-register U,
        # so feeding rho's columns gives U rho; conjugating the rows in and
        # out turns the second pass into right-multiplication by U^dagger.
        a = backend.batch_apply_dense(self.matrix.T, u, qubits).T  # U rho
        b = backend.batch_apply_dense(a.conj(), u, qubits).conj()  # ... U^dag
        return DensityMatrix(self.n_qubits, b, copy=False)

    def sandwich_pauli(self, xmask: int, zmask: int, ny: int) -> "DensityMatrix":
        """Return ``P rho P^dagger`` for a Pauli string ``P``."""
        a = backend.batch_apply_pauli(self.matrix.T, xmask, zmask, ny).T
        b = backend.batch_apply_pauli(a.conj(), xmask, zmask, ny).conj()
        return DensityMatrix(self.n_qubits, b, copy=False)

    def rotated(self, generator: HermitianOperator, angle: float) -> "DensityMatrix":
        """Return ``e^{-i angle G} rho e^{+i angle G}``."""
        sup = generator.support or (0,)
        w, v = np.linalg.eigh(generator.local_matrix(sup))
        u = (v * np.exp(-1j * angle * w)) @ v.conj().T
        return self.sandwich_unitary(u, sup)

    def __add__(self, other: "DensityMatrix") -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, self.matrix + other.matrix, copy=False)

    def scaled(self, factor: float) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, factor * self.matrix, copy=False)
