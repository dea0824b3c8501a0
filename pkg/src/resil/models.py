"""Built-in model constructions: two-qubit flip drives, p-spin kick/mix
compilations and anneals, distance-2 code syndrome circuits, and random
brickwork circuits.

Conventions follow the package: qubit 0 is the least-significant bit, noise
sites act after their layer's gates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from resil import backend
from resil.analog import Ramp, Schedule, propagate
from resil.circuit import AngleDistribution, Circuit, Gate, Layer, NoiseSite
from resil.core import (
    HermitianOperator,
    InputError,
    NumericalError,
    StateVector,
)

__all__ = [
    "flip_hamiltonians",
    "flip_noise_ops",
    "build_flip_example",
    "PSpinModel",
    "build_pspin",
    "pspin_bangbang",
    "pspin_bangbang_schedule",
    "pspin_adiabatic_schedule",
    "pspin_path_length_closed",
    "build_code_circuit",
    "brickwork_circuit",
    "random_pauli_sites",
    "MODELS",
    "build_model",
]


# ---------------------------------------------------------------------------
# Two-qubit flip drives: two Hamiltonians with the same start and end states
# ---------------------------------------------------------------------------

def flip_hamiltonians() -> dict[str, tuple[HermitianOperator, float]]:
    """Two drives taking |00> to |11>, with their runtimes.

    Form ``a`` is the entangling exchange (XY+YX)/2 over runtime pi/2; form
    ``b`` is the product drive (Y0+Y1)/2 over runtime pi.
    """
    h_a = HermitianOperator(
        2, [(0.5, ((0, "X"), (1, "Y"))), (0.5, ((0, "Y"), (1, "X")))]
    )
    h_b = HermitianOperator(2, [(0.5, ((0, "Y"),)), (0.5, ((1, "Y"),))])
    return {"a": (h_a, math.pi / 2.0), "b": (h_b, math.pi)}


def flip_noise_ops() -> dict[str, HermitianOperator]:
    """The two probe operators used with the flip drives.

    ``q_i`` is the two-qubit correlator XX; ``q_ii`` is the projector onto
    (qubit 0 in |1>) and (qubit 1 in |->_X), expanded in Pauli strings.
    """
    q_i = HermitianOperator.pauli(2, "XX")
    q_ii = HermitianOperator(
        2,
        [
            (0.25, ()),
            (-0.25, ((0, "Z"),)),
            (-0.25, ((1, "X"),)),
            (0.25, ((0, "Z"), (1, "X"))),
        ],
    )
    return {"q_i": q_i, "q_ii": q_ii}


def build_flip_example(which: str) -> Schedule:
    """Constant-Hamiltonian schedule for flip form ``"a"`` or ``"b"``.

    Verifies at build time that the drive transfers |00> to |11> exactly.
    """
    forms = flip_hamiltonians()
    if which not in forms:
        raise InputError(f"flip form must be one of {sorted(forms)}, got {which!r}")
    h, runtime = forms[which]
    schedule = Schedule(2, [(h, Ramp.constant(1.0))], runtime)
    final = propagate(schedule)
    if abs(abs(final.amplitudes[3]) - 1.0) > 1e-12:
        raise NumericalError(
            f"flip form {which!r} failed the |00> -> |11> transfer check"
        )
    return schedule


# ---------------------------------------------------------------------------
# p-spin kick/mix models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PSpinModel:
    """Symmetric p-spin problem on n qubits (both n and p odd).

    The problem Hamiltonian is ``H1 = -Mz^p / (2 n^(p-1))`` and the mixer is
    ``H0 = -Mx / 2`` with ``Ma`` the total spin component (sum of Paulis).
    """

    n: int
    p: int

    def __post_init__(self):
        if self.n < 1 or self.n % 2 == 0:
            raise InputError(f"n must be odd and >= 1, got {self.n}")
        if self.p < 1 or self.p % 2 == 0:
            raise InputError(f"p must be odd and >= 1, got {self.p}")

    @property
    def kick_time(self) -> float:
        """Kick duration (pi/2) n^(p-1): the shortest exact transfer kick."""
        return (math.pi / 2.0) * self.n ** (self.p - 1)

    @property
    def mix_time(self) -> float:
        return math.pi / 2.0


def symmetric_z_power(n: int, p: int) -> list[tuple[Fraction, int]]:
    """Exact Z-string weights of ``(Z_1 + ... + Z_n)^p``.

    Returns ``(coefficient, s)`` pairs; the operator is the sum of
    ``coefficient * Z_S`` over all qubit subsets S of each listed size s.
    Coefficients are exact dyadic rationals.
    """
    out = []
    for s in range(p % 2, min(n, p) + 1, 2):
        total = Fraction(0)
        for a in range(s + 1):
            for b in range(n - s + 1):
                f = (n - 2 * (a + b)) ** p
                total += Fraction(
                    (-1) ** a * math.comb(s, a) * math.comb(n - s, b) * f
                )
        c = total / (1 << n)
        if c != 0:
            out.append((c, s))
    return out


def build_pspin(model: PSpinModel) -> tuple[HermitianOperator, HermitianOperator]:
    """The mixer ``H0`` and problem Hamiltonian ``H1`` operators."""
    n, p = model.n, model.p
    h0 = HermitianOperator(n, [(-0.5, ((q, "X"),)) for q in range(n)])
    scale = Fraction(-1, 2 * n ** (p - 1))
    terms = []
    for c, s in symmetric_z_power(n, p):
        coeff = float(c * scale)
        for subset in itertools.combinations(range(n), s):
            terms.append((coeff, tuple((q, "Z") for q in subset)))
    h1 = HermitianOperator(n, terms)
    return h0, h1


def pspin_bangbang(model: PSpinModel) -> Circuit:
    """Two-layer kick/mix circuit from the uniform superposition.

    ``exp(-i t1 H1)`` then ``exp(-i t2 H0)`` with t1 = (pi/2) n^(p-1) and
    t2 = pi/2 reaches the all-zeros state exactly.
    """
    h0, h1 = build_pspin(model)
    kick = Gate.rot(h1, model.kick_time, name="kick")
    mix = Gate.rot(h0, model.mix_time, name="mix")
    return Circuit(
        model.n,
        [Layer([kick]), Layer([mix])],
        initial_state=StateVector.plus(model.n),
    )


def pspin_bangbang_schedule(model: PSpinModel) -> Schedule:
    """The same kick/mix compilation as a piecewise-constant schedule."""
    h0, h1 = build_pspin(model)
    t1, t2 = model.kick_time, model.mix_time
    edges = [0.0, t1, t1 + t2]
    return Schedule(
        model.n,
        [
            (h1, Ramp.steps(edges, [1.0, 0.0])),
            (h0, Ramp.steps(edges, [0.0, 1.0])),
        ],
        t1 + t2,
        initial_state=StateVector.plus(model.n),
    )


def pspin_adiabatic_schedule(model: PSpinModel, runtime: float) -> Schedule:
    """Linear interpolation from the mixer to the problem Hamiltonian."""
    h0, h1 = build_pspin(model)
    return Schedule(
        model.n,
        [
            (h0, Ramp.linear(1.0, 0.0, runtime)),
            (h1, Ramp.linear(0.0, 1.0, runtime)),
        ],
        runtime,
        initial_state=StateVector.plus(model.n),
    )


def pspin_path_length_closed(model: PSpinModel) -> float:
    """Closed-form path length of the kick/mix compilation.

    Kick: duration times sqrt(var(H1)) in the uniform superposition, which
    reduces to (pi/4) sqrt(sum_k C(n,k) (n-2k)^(2p) / 2^n) — evaluated in
    exact integer arithmetic (any size n).  Mix: (pi/4) sqrt(n).
    """
    n, p = model.n, model.p
    total = 0
    for k in range(n + 1):
        total += math.comb(n, k) * (n - 2 * k) ** (2 * p)
    s = Fraction(total, 1 << n)
    try:
        root = math.sqrt(float(s))
    except OverflowError:
        root = math.exp(0.5 * (math.log(s.numerator) - math.log(s.denominator)))
    return (math.pi / 4.0) * root + (math.pi / 4.0) * math.sqrt(n)


# ---------------------------------------------------------------------------
# Distance-2 code syndrome circuits
# ---------------------------------------------------------------------------

_DATA = (0, 1, 2, 3)
_ANC_X, _ANC_Z12, _ANC_Z34 = 4, 5, 6


def _planar_codewords() -> tuple[np.ndarray, np.ndarray]:
    """Codewords of the four-qubit code with stabilizers XXXX, Z0Z1, Z2Z3."""
    stabs = [
        HermitianOperator.pauli(4, "XXXX", (0, 1, 2, 3)),
        HermitianOperator.pauli(4, "ZZ", (0, 1)),
        HermitianOperator.pauli(4, "ZZ", (2, 3)),
    ]

    def project(seed_index: int) -> np.ndarray:
        psi = np.zeros(16, dtype=complex)
        psi[seed_index] = 1.0
        for s in stabs:
            psi = 0.5 * (psi + s.apply(psi))
        return psi / np.linalg.norm(psi)

    return project(0b0000), project(0b0011)  # logical X = X0 X1 maps between them


def _code_layers(kind: str) -> list[Layer]:
    a, z1, z2 = _ANC_X, _ANC_Z12, _ANC_Z34
    if kind == "planar":
        return [
            Layer([Gate.h(a)]),
            Layer([Gate.cx(a, 0), Gate.cx(2, z2)]),
            Layer([Gate.cx(a, 2), Gate.cx(3, z2)]),
            Layer([Gate.cx(a, 1), Gate.cx(0, z1)]),
            Layer([Gate.cx(a, 3), Gate.cx(1, z1)]),
            Layer([Gate.h(a)]),
        ]
    return [
        Layer([Gate.h(a), Gate.h(z1), Gate.h(z2)]),
        Layer([Gate.cx(a, 0), Gate.cx(z2, 2)]),
        Layer([Gate.cz(a, 2), Gate.cz(z2, 3)]),
        Layer([Gate.cz(a, 1), Gate.cz(z1, 0)]),
        Layer([Gate.cx(a, 3), Gate.cx(z1, 1)]),
        Layer([Gate.h(a), Gate.h(z1), Gate.h(z2)]),
    ]


def build_code_circuit(
    kind: str, alpha: complex = 1.0, beta: complex = 0.0
) -> tuple[Circuit, StateVector]:
    """Syndrome-extraction circuit and encoded input for a distance-2 code.

    ``kind="planar"`` measures XXXX, Z0Z1, Z2Z3 on data qubits 0-3 through
    ancillas 4 (X-type, Hadamard-framed), 5 and 6 (Z-type).
    ``kind="xzzx"`` is the same code conjugated by Hadamards on data qubits
    1 and 2, measuring X0 Z1 Z2 X3, Z0 X1, X2 Z3 with all three ancillas
    Hadamard-framed.  On an encoded input the circuit acts as the identity,
    returning every ancilla to |0>.

    The returned state encodes ``alpha``/``beta`` logical amplitudes
    (must be normalized within 1e-10).
    """
    if kind not in ("planar", "xzzx"):
        raise InputError(f"code kind must be 'planar' or 'xzzx', got {kind!r}")
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-10:
        raise InputError("logical amplitudes must satisfy |alpha|^2 + |beta|^2 = 1")
    zero_l, one_l = _planar_codewords()
    data = alpha * zero_l + beta * one_l
    if kind == "xzzx":
        h2 = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)
        data = backend.apply_dense(data, h2, (1,))
        data = backend.apply_dense(data, h2, (2,))
    full = np.zeros(1 << 7, dtype=complex)
    full[: 1 << 4] = data  # ancillas 4-6 in |0>; data bits are the low bits
    psi0 = StateVector(7, full, copy=False)
    circuit = Circuit(7, _code_layers(kind), initial_state=psi0)
    return circuit, psi0


# ---------------------------------------------------------------------------
# Random brickwork circuits
# ---------------------------------------------------------------------------

def _haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z / math.sqrt(2.0))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def brickwork_circuit(n_qubits: int, depth: int, seed: int = 0) -> Circuit:
    """Alternating bricks of Haar-random two-qubit gates."""
    if n_qubits < 2:
        raise InputError("brickwork needs at least 2 qubits")
    if depth < 1:
        raise InputError("depth must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    layers = []
    for layer_index in range(depth):
        offset = layer_index % 2
        gates = []
        for q in range(offset, n_qubits - 1, 2):
            u = _haar_unitary(rng, 4)
            gates.append(Gate.unitary_gate(u, (q, q + 1), name="haar2"))
        layers.append(Layer(gates))
    return Circuit(n_qubits, layers)


def random_pauli_sites(
    circuit: Circuit,
    seed: int,
    sigma: float,
    kind: str = "two_point",
    sites_per_layer: int = 1,
) -> Circuit:
    """Attach random single-qubit Pauli noise sites to every layer."""
    if sites_per_layer < 1:
        raise InputError("sites_per_layer must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    dist = AngleDistribution(kind, sigma)
    n = circuit.n_qubits
    layers = []
    for layer in circuit.layers:
        noise = list(layer.noise)
        for _ in range(sites_per_layer):
            q = int(rng.integers(n))
            letter = "XYZ"[int(rng.integers(3))]
            noise.append(NoiseSite(HermitianOperator.pauli(n, letter, (q,)), dist))
        layers.append(Layer(layer.gates, noise))
    return Circuit(n, layers, circuit.initial_state)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

def _build_pspin_circuit(n: int = 3, p: int = 3) -> Circuit:
    return pspin_bangbang(PSpinModel(int(n), int(p)))


def _build_pspin_anneal(n: int = 3, p: int = 3, T: float = 10.0) -> Schedule:
    return pspin_adiabatic_schedule(PSpinModel(int(n), int(p)), float(T))


def _build_planar(alpha: float = 1.0, beta: float = 0.0) -> Circuit:
    return build_code_circuit("planar", complex(alpha), complex(beta))[0]


def _build_xzzx(alpha: float = 1.0, beta: float = 0.0) -> Circuit:
    return build_code_circuit("xzzx", complex(alpha), complex(beta))[0]


def _build_flip_a() -> Schedule:
    return build_flip_example("a")


def _build_flip_b() -> Schedule:
    return build_flip_example("b")


def _build_brickwork(n: int = 4, depth: int = 8, seed: int = 7) -> Circuit:
    return brickwork_circuit(int(n), int(depth), int(seed))


MODELS = {
    "pspin": _build_pspin_circuit,
    "pspin-anneal": _build_pspin_anneal,
    "planar-d2": _build_planar,
    "xzzx-d2": _build_xzzx,
    "flip-a": _build_flip_a,
    "flip-b": _build_flip_b,
    "brickwork": _build_brickwork,
}


def build_model(spec: str):
    """Build a registered model from ``"name"`` or ``"name:k=v,k=v"``."""
    name, _, arg_str = spec.partition(":")
    name = name.strip()
    if name not in MODELS:
        raise InputError(f"unknown model {name!r}; available: {sorted(MODELS)}")
    kwargs = {}
    if arg_str:
        for item in arg_str.split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise InputError(f"model argument {item!r} is not key=value")
            kwargs[key.strip()] = float(value) if "." in value or "e" in value.lower() else int(value)
    try:
        return MODELS[name](**kwargs)
    except TypeError as exc:
        raise InputError(f"bad arguments for model {name!r}: {exc}") from None
