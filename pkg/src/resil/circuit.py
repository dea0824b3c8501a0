"""Layered digital circuits with explicit coherent-noise insertion points.

A :class:`Circuit` is a sequence of :class:`Layer` objects; each layer holds
gates acting on pairwise-disjoint qubits, followed by zero or more
:class:`NoiseSite` entries.  A noise site multiplies the state by
``exp(-i * delta * P)`` for a unit Pauli string ``P``, where ``delta`` is a
random over-rotation angle drawn from the site's
:class:`AngleDistribution`.  Sites act after all gates of their layer, in
listed order, on the state the layer's gates produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from resil import backend
from resil.core import (
    HermitianOperator,
    InputError,
    NumericalError,
    StateVector,
)

__all__ = [
    "AngleDistribution",
    "Gate",
    "NoiseSite",
    "PlacedSite",
    "Layer",
    "Circuit",
    "simulate_trajectory",
    "simulate_noisy",
]

_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class AngleDistribution:
    """Zero-mean over-rotation angle law with standard deviation ``sigma``.

    Kinds: ``two_point`` (+/- sigma with equal probability), ``gaussian``,
    and ``uniform`` (half-width ``sigma * sqrt(3)``).
    """

    kind: str = "two_point"
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("two_point", "gaussian", "uniform"):
            raise InputError(f"unknown angle distribution kind {self.kind!r}")
        if not (self.sigma >= 0.0 and math.isfinite(self.sigma)):
            raise InputError(f"sigma must be finite and >= 0, got {self.sigma}")

    @property
    def variance(self) -> float:
        return self.sigma * self.sigma

    def s_value(self) -> float:
        """``E[sin^2(delta)]`` — the exact channel mixing weight."""
        s = self.sigma
        if s == 0.0:
            return 0.0
        if self.kind == "two_point":
            return math.sin(s) ** 2
        if self.kind == "gaussian":
            return -0.5 * math.expm1(-2.0 * s * s)
        w = s * _SQRT3  # uniform on [-w, w]
        return 0.5 * (1.0 - math.sin(2.0 * w) / (2.0 * w))

    def transform(self, u: np.ndarray) -> np.ndarray:
        """Map uniform(0, 1) draws to angle draws (shape-preserving)."""
        if self.kind == "two_point":
            return np.where(u >= 0.5, self.sigma, -self.sigma)
        if self.kind == "uniform":
            return (self.sigma * _SQRT3) * (2.0 * u - 1.0)
        from resil.noise import inverse_normal_cdf

        return self.sigma * inverse_normal_cdf(u)


class Gate:
    """A unitary circuit element on an ordered tuple of qubits.

    Either a Hermitian ``generator`` with an ``angle`` (the gate is
    ``exp(-i * angle * generator)``) or a dense local ``unitary`` matrix —
    or both, in which case they must agree.  The generator lives on a local
    register of ``len(qubits)`` qubits whose qubit ``j`` is ``qubits[j]``;
    in dense matrices ``qubits[0]`` is the local least-significant bit.
    """

    __slots__ = ("name", "qubits", "generator", "angle", "unitary", "_cache")

    def __init__(
        self,
        qubits: Sequence[int],
        *,
        generator: HermitianOperator | None = None,
        angle: float | None = None,
        unitary=None,
        name: str = "gate",
    ):
        qubits = tuple(int(q) for q in qubits)
        if len(set(qubits)) != len(qubits) or any(q < 0 for q in qubits):
            raise InputError(f"gate qubits must be distinct and >= 0, got {qubits}")
        if generator is None and unitary is None:
            raise InputError("gate needs a generator or a unitary")
        if generator is not None:
            if angle is None:
                raise InputError("generator gates need an angle")
            if generator.n_qubits != len(qubits):
                raise InputError(
                    f"generator register size {generator.n_qubits} != "
                    f"{len(qubits)} gate qubits"
                )
            angle = float(angle)
        if unitary is not None:
            unitary = np.asarray(unitary, dtype=np.complex128)
            k = len(qubits)
            if unitary.shape != (1 << k, 1 << k):
                raise InputError(
                    f"unitary shape {unitary.shape} does not match {k} qubits"
                )
            defect = np.max(np.abs(unitary.conj().T @ unitary - np.eye(1 << k)))
            if defect > 1e-12 * (1 << k):
                raise InputError(f"matrix is not unitary (defect {defect:.2e})")
            unitary = unitary.copy()
            unitary.setflags(write=False)
        self.name = str(name)
        self.qubits = qubits
        self.generator = generator
        self.angle = angle
        self.unitary = unitary
        self._cache: dict = {}
        if generator is not None and unitary is not None:
            u = self._unitary_from_generator()
            if np.max(np.abs(u - unitary)) > 1e-12:
                raise InputError(
                    f"gate {self.name!r}: generator and unitary disagree"
                )

    def __repr__(self) -> str:
        ang = f", angle={self.angle:.6g}" if self.angle is not None else ""
        return f"Gate({self.name!r}, qubits={self.qubits}{ang})"

    def _unitary_from_generator(self) -> np.ndarray:
        w, v = np.linalg.eigh(self.generator.local_matrix(tuple(range(len(self.qubits)))))
        return (v * np.exp(-1j * self.angle * w)) @ v.conj().T

    def local_unitary(self) -> np.ndarray:
        """Dense local matrix of the gate (cached; qubits[0] = local LSB)."""
        u = self._cache.get("u")
        if u is None:
            u = self.unitary if self.unitary is not None else self._unitary_from_generator()
            u.setflags(write=False)
            self._cache["u"] = u
        return u

    def global_generator(self, n_qubits: int) -> HermitianOperator:
        """The gate generator embedded on the full ``n_qubits`` register."""
        g = self._cache.get(("gen", n_qubits))
        if g is None:
            gen = self.generator
            if gen is None:
                gen, _ = self.generator_angle()
            terms = [
                (c, tuple((self.qubits[q], letter) for q, letter in key))
                for key, c in gen.terms
            ]
            g = HermitianOperator(n_qubits, terms)
            self._cache[("gen", n_qubits)] = g
        return g

    def generator_angle(self) -> tuple[HermitianOperator, float]:
        """Return ``(generator, angle)``; derived from the matrix if needed.

        For matrix-only gates the generator is the principal logarithm
        (eigenphases in ``(-pi, pi]``) with angle 1.  Raises
        :class:`NumericalError` if the reconstruction does not reproduce the
        matrix to 1e-10.
        """
        if self.generator is not None:
            return self.generator, self.angle
        pair = self._cache.get("genangle")
        if pair is None:
            u = self.local_unitary()
            lam, v = np.linalg.eig(u)
            theta = -np.angle(lam)
            theta[theta <= -math.pi] = math.pi
            h = (v * theta) @ np.linalg.inv(v)
            h = 0.5 * (h + h.conj().T)
            w, vv = np.linalg.eigh(h)
            u2 = (vv * np.exp(-1j * w)) @ vv.conj().T
            if np.max(np.abs(u2 - u)) > 1e-10:
                raise NumericalError(
                    f"gate {self.name!r}: could not extract a Hermitian generator"
                )
            local = tuple(range(len(self.qubits)))
            gen = HermitianOperator.from_dense(h, local, len(self.qubits), tol=1e-10)
            pair = (gen, 1.0)
            self._cache["genangle"] = pair
        return pair

    def apply_vec(self, psi: np.ndarray, n_qubits: int) -> np.ndarray:
        """Apply the gate to a full-register amplitude array."""
        if self.unitary is not None or len(self.qubits) <= 3:
            return backend.apply_dense(psi, self.local_unitary(), self.qubits)
        return self.global_generator(n_qubits).evolve_vec(psi, self.angle)

    # -- named constructors ------------------------------------------------

    @classmethod
    def h(cls, q: int) -> "Gate":
        inv = 0.5 / math.sqrt(2.0)
        gen = HermitianOperator(1, [(0.5, ()), (-inv, ((0, "X"),)), (-inv, ((0, "Z"),))])
        u = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)
        return cls((q,), generator=gen, angle=math.pi, unitary=u, name="h")

    @classmethod
    def x(cls, q: int) -> "Gate":
        gen = HermitianOperator(1, [(0.5, ()), (-0.5, ((0, "X"),))])
        u = np.array([[0, 1], [1, 0]], dtype=complex)
        return cls((q,), generator=gen, angle=math.pi, unitary=u, name="x")

    @classmethod
    def y(cls, q: int) -> "Gate":
        gen = HermitianOperator(1, [(0.5, ()), (-0.5, ((0, "Y"),))])
        u = np.array([[0, -1j], [1j, 0]], dtype=complex)
        return cls((q,), generator=gen, angle=math.pi, unitary=u, name="y")

    @classmethod
    def z(cls, q: int) -> "Gate":
        gen = HermitianOperator(1, [(0.5, ()), (-0.5, ((0, "Z"),))])
        u = np.array([[1, 0], [0, -1]], dtype=complex)
        return cls((q,), generator=gen, angle=math.pi, unitary=u, name="z")

    @classmethod
    def s(cls, q: int) -> "Gate":
        gen = HermitianOperator(1, [(0.5, ()), (-0.5, ((0, "Z"),))])
        u = np.array([[1, 0], [0, 1j]], dtype=complex)
        return cls((q,), generator=gen, angle=-0.5 * math.pi, unitary=u, name="s")

    @classmethod
    def rx(cls, q: int, angle: float) -> "Gate":
        gen = HermitianOperator(1, [(0.5, ((0, "X"),))])
        return cls((q,), generator=gen, angle=angle, name="rx")

    @classmethod
    def ry(cls, q: int, angle: float) -> "Gate":
        gen = HermitianOperator(1, [(0.5, ((0, "Y"),))])
        return cls((q,), generator=gen, angle=angle, name="ry")

    @classmethod
    def rz(cls, q: int, angle: float) -> "Gate":
        gen = HermitianOperator(1, [(0.5, ((0, "Z"),))])
        return cls((q,), generator=gen, angle=angle, name="rz")

    @classmethod
    def cx(cls, control: int, target: int) -> "Gate":
        # (|1><1| on control) x (I - X)/2 on target
        gen = HermitianOperator(
            2,
            [
                (0.25, ()),
                (-0.25, ((0, "Z"),)),
                (-0.25, ((1, "X"),)),
                (0.25, ((0, "Z"), (1, "X"))),
            ],
        )
        u = np.zeros((4, 4), dtype=complex)  # control = local LSB
        u[0, 0] = u[2, 2] = 1.0
        u[1, 3] = u[3, 1] = 1.0
        return cls((control, target), generator=gen, angle=math.pi, unitary=u, name="cx")

    @classmethod
    def cz(cls, control: int, target: int) -> "Gate":
        gen = HermitianOperator(
            2,
            [
                (0.25, ()),
                (-0.25, ((0, "Z"),)),
                (-0.25, ((1, "Z"),)),
                (0.25, ((0, "Z"), (1, "Z"))),
            ],
        )
        u = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
        return cls((control, target), generator=gen, angle=math.pi, unitary=u, name="cz")

    @classmethod
    def rot(
        cls,
        generator: HermitianOperator,
        angle: float,
        qubits: Sequence[int] | None = None,
        name: str = "rot",
    ) -> "Gate":
        """``exp(-i * angle * generator)`` with local qubit j -> qubits[j]."""
        if qubits is None:
            qubits = tuple(range(generator.n_qubits))
        return cls(tuple(qubits), generator=generator, angle=angle, name=name)

    @classmethod
    def unitary_gate(cls, matrix, qubits: Sequence[int], name: str = "u") -> "Gate":
        return cls(tuple(qubits), unitary=matrix, name=name)


class NoiseSite:
    """A coherent over-rotation slot: ``exp(-i * delta * P)`` after a layer.

    ``operator`` must be a unit-coefficient Pauli string on the full
    register.  Sites compare by identity — two structurally equal sites at
    different circuit positions stay distinct.
    """

    __slots__ = ("operator", "distribution", "paired_gate", "masks")

    def __init__(
        self,
        operator: HermitianOperator,
        distribution: AngleDistribution,
        paired_gate: tuple[int, int] | None = None,
    ):
        terms = operator.terms
        if len(terms) != 1 or terms[0][1] != 1.0 or not terms[0][0]:
            raise InputError("noise operator must be a unit Pauli string")
        if not isinstance(distribution, AngleDistribution):
            raise InputError("distribution must be an AngleDistribution")
        if paired_gate is not None:
            paired_gate = (int(paired_gate[0]), int(paired_gate[1]))
        self.operator = operator
        self.distribution = distribution
        self.paired_gate = paired_gate
        self.masks = operator._masks[0]

    @property
    def sigma(self) -> float:
        return self.distribution.sigma

    def __repr__(self) -> str:
        label = "".join(f"{letter}{q}" for q, letter in self.operator.terms[0][0])
        return f"NoiseSite({label}, sigma={self.sigma:.4g}, {self.distribution.kind})"


class PlacedSite(NamedTuple):
    """A noise site with its circuit coordinates."""

    ordinal: int
    layer: int
    position: int
    site: NoiseSite


class Layer:
    """Gates on disjoint qubits, then noise sites in listed order."""

    __slots__ = ("gates", "noise")

    def __init__(self, gates: Iterable[Gate] = (), noise: Iterable[NoiseSite] = ()):
        self.gates = tuple(gates)
        self.noise = tuple(noise)
        seen: set[int] = set()
        for g in self.gates:
            if seen.intersection(g.qubits):
                raise InputError(
                    f"layer gates overlap on qubits {sorted(seen.intersection(g.qubits))}"
                )
            seen.update(g.qubits)


class Circuit:
    """A fixed-width layered circuit with an optional initial state."""

    __slots__ = ("n_qubits", "layers", "initial_state")

    def __init__(
        self,
        n_qubits: int,
        layers: Iterable[Layer],
        initial_state: StateVector | None = None,
    ):
        self.n_qubits = int(n_qubits)
        if self.n_qubits < 1:
            raise InputError("circuit needs at least one qubit")
        self.layers = tuple(layers)
        seen_sites: set[int] = set()
        for li, layer in enumerate(self.layers):
            if not isinstance(layer, Layer):
                raise InputError(f"layers[{li}] is not a Layer")
            for g in layer.gates:
                if max(g.qubits) >= self.n_qubits:
                    raise InputError(
                        f"layers[{li}]: gate {g.name!r} uses qubit {max(g.qubits)} "
                        f">= n_qubits {self.n_qubits}"
                    )
            for site in layer.noise:
                if id(site) in seen_sites:
                    raise InputError(
                        f"layers[{li}]: the same NoiseSite object appears twice; "
                        "sites are identified by object, create one per slot"
                    )
                seen_sites.add(id(site))
                if site.operator.n_qubits != self.n_qubits:
                    raise InputError(
                        f"layers[{li}]: noise operator register size "
                        f"{site.operator.n_qubits} != {self.n_qubits}"
                    )
                if site.paired_gate is not None:
                    gl, gi = site.paired_gate
                    if not (0 <= gl < len(self.layers)) or not (
                        0 <= gi < len(self.layers[gl].gates)
                    ):
                        raise InputError(
                            f"layers[{li}]: paired gate ({gl}, {gi}) does not exist"
                        )
        if initial_state is not None and initial_state.n_qubits != self.n_qubits:
            raise InputError("initial state register size differs from circuit")
        self.initial_state = initial_state

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def num_gates(self) -> int:
        return sum(len(layer.gates) for layer in self.layers)

    @property
    def num_noise_sites(self) -> int:
        return sum(len(layer.noise) for layer in self.layers)

    def noise_sites(self) -> Iterator[PlacedSite]:
        """Yield sites in circuit order: layer-ascending, position-ascending."""
        ordinal = 0
        for li, layer in enumerate(self.layers):
            for pi, site in enumerate(layer.noise):
                yield PlacedSite(ordinal, li, pi, site)
                ordinal += 1

    def start_state(self, psi0: StateVector | None = None) -> StateVector:
        state = psi0 if psi0 is not None else self.initial_state
        if state is None:
            state = StateVector.zero(self.n_qubits)
        if state.n_qubits != self.n_qubits:
            raise InputError("initial state register size differs from circuit")
        return state

    def with_initial_state(self, state: StateVector) -> "Circuit":
        return Circuit(self.n_qubits, self.layers, state)


def _trajectory_arrays(circuit: Circuit, psi0: StateVector | None = None) -> list[np.ndarray]:
    psi = circuit.start_state(psi0).amplitudes.copy()
    out = [psi]
    for layer in circuit.layers:
        for gate in layer.gates:
            psi = gate.apply_vec(psi, circuit.n_qubits)
        out.append(psi)
    return out


def simulate_trajectory(circuit: Circuit, psi0: StateVector | None = None) -> list[StateVector]:
    """Noise-free evolution; returns depth+1 states (before/after each layer)."""
    return [
        StateVector(circuit.n_qubits, arr, copy=False)
        for arr in _trajectory_arrays(circuit, psi0)
    ]


def _site_angle(values, placed: PlacedSite) -> float:
    if isinstance(values, Mapping):
        if placed.site in values:
            return float(values[placed.site])
        if placed.site.sigma > 0.0:
            raise InputError(
                f"no angle supplied for noise site {placed.ordinal} "
                f"(layer {placed.layer}, position {placed.position})"
            )
        return 0.0
    return float(values[placed.ordinal])


def simulate_noisy(
    circuit: Circuit,
    realization,
    psi0: StateVector | None = None,
) -> StateVector:
    """Evolve through the circuit with fixed over-rotation angles.

    ``realization`` is either a mapping ``{NoiseSite: angle}`` (sites with
    sigma = 0 may be omitted) or a sequence of angles in site order.  Angles
    equal to 0.0 leave the state bitwise untouched.
    """
    if not isinstance(realization, Mapping):
        realization = np.asarray(realization, dtype=np.float64)
        if realization.shape != (circuit.num_noise_sites,):
            raise InputError(
                f"expected {circuit.num_noise_sites} noise angles, "
                f"got shape {realization.shape}"
            )
    placed_by_layer: list[list[PlacedSite]] = [[] for _ in circuit.layers]
    for placed in circuit.noise_sites():
        placed_by_layer[placed.layer].append(placed)
    psi = circuit.start_state(psi0).amplitudes.copy()
    for li, layer in enumerate(circuit.layers):
        for gate in layer.gates:
            psi = gate.apply_vec(psi, circuit.n_qubits)
        for placed in placed_by_layer[li]:
            delta = _site_angle(realization, placed)
            if delta != 0.0:
                xm, zm, ny = placed.site.masks
                ppsi = backend.apply_pauli(psi, xm, zm, ny)
                psi = math.cos(delta) * psi - 1j * math.sin(delta) * ppsi
    return StateVector(circuit.n_qubits, psi, copy=False)
