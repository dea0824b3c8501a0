"""Fragility of digital circuits under coherent over-rotation noise.

The fragility of a noise realization is the Bures-style distance
``2 * (1 - |<ideal|noisy>|)`` between the noise-free and noisy final
states.  To second order in the angles this is the quadratic form
``delta^T G delta`` where ``G`` is the covariance matrix of the noise
generators propagated to the end of the circuit: ``G[s, t] =
Re<phi_s|phi_t> - m_s m_t`` with ``phi_s`` the final state's sensitivity
vector for site ``s`` (the site operator applied to the post-layer state
and pushed forward through the remaining gates) and ``m_s`` its overlap
with the ideal final state.

The sensitivity vectors are computed in a single forward pass: partially
propagated vectors are stacked and advanced through each later gate as one
batch.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from resil import runners
from resil.circuit import (
    Circuit,
    PlacedSite,
    _site_angle,
    _trajectory_arrays,
    simulate_noisy,
)
from resil.core import InputError, StateVector

__all__ = [
    "FragilityReport",
    "SensitivityData",
    "forward_sensitivity",
    "noise_gram",
    "fragility_exact",
    "fragility_perturbative",
    "fragility_avg",
    "overlap_incoherent",
    "fragility_mc",
]


@dataclass
class FragilityReport:
    """A fragility number with its provenance.

    ``contributions`` (when present) are per-site addends in circuit site
    order; ``stderr`` is set by Monte-Carlo estimators.
    """

    method: str
    value: float
    stderr: float | None = None
    contributions: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "value": self.value,
            "stderr": self.stderr,
            "contributions": (
                None if self.contributions is None
                else [float(c) for c in self.contributions]
            ),
            "metadata": self.metadata,
        }


@dataclass
class SensitivityData:
    """Forward-pass products shared by the quadratic-form estimators."""

    final: np.ndarray                 # ideal final amplitudes
    phi: np.ndarray                   # (n_sites, dim) sensitivity vectors
    means: np.ndarray                 # Re<final|phi_s>
    sites: tuple[PlacedSite, ...]


def forward_sensitivity(circuit: Circuit, psi0: StateVector | None = None) -> SensitivityData:
    """One forward pass: ideal final state plus per-site sensitivity vectors."""
    n = circuit.n_qubits
    psi = circuit.start_state(psi0).amplitudes.copy()
    placed = tuple(circuit.noise_sites())
    by_layer: list[list[PlacedSite]] = [[] for _ in circuit.layers]
    for p in placed:
        by_layer[p.layer].append(p)
    phi = np.zeros((0, psi.shape[0]), dtype=np.complex128)
    for li, layer in enumerate(circuit.layers):
        for gate in layer.gates:
            psi = gate.apply_vec(psi, n)
            if phi.shape[0]:
                phi = runners._batch_gate(phi, gate, n)
        new_rows = [p.site.operator.apply(psi) for p in by_layer[li]]
        if new_rows:
            phi = np.vstack([phi, new_rows])
    means = (phi @ psi.conj()).real if phi.shape[0] else np.zeros(0)
    return SensitivityData(final=psi, phi=phi, means=means, sites=placed)


def noise_gram(
    circuit: Circuit,
    psi0: StateVector | None = None,
    data: SensitivityData | None = None,
) -> np.ndarray:
    """Covariance matrix G of the propagated noise generators.

    Positive semidefinite up to roundoff; ``G[s, s]`` equals the variance of
    site s's operator in the state right after its layer's gates.
    """
    if data is None:
        data = forward_sensitivity(circuit, psi0)
    overlap = (data.phi @ data.phi.conj().T).real
    return overlap - np.outer(data.means, data.means)


def _angles_array(circuit: Circuit, realization) -> np.ndarray:
    if isinstance(realization, Mapping):
        return np.array(
            [_site_angle(realization, p) for p in circuit.noise_sites()],
            dtype=np.float64,
        )
    arr = np.asarray(realization, dtype=np.float64)
    if arr.shape != (circuit.num_noise_sites,):
        raise InputError(
            f"expected {circuit.num_noise_sites} angles, got shape {arr.shape}"
        )
    return arr


def fragility_exact(
    circuit: Circuit, realization, psi0: StateVector | None = None
) -> FragilityReport:
    """``2 (1 - |<ideal|noisy>|)`` for one noise realization."""
    ideal = _trajectory_arrays(circuit, psi0)[-1]
    noisy = simulate_noisy(circuit, realization, psi0)
    f = abs(np.vdot(ideal, noisy.amplitudes))
    return FragilityReport(
        method="exact", value=2.0 * (1.0 - f), metadata={"overlap": f}
    )


def fragility_perturbative(
    circuit: Circuit, realization, psi0: StateVector | None = None
) -> FragilityReport:
    """Quadratic-form fragility ``delta^T G delta`` for one realization.

    Accurate to O(|delta|^3); warns when the total rotation budget
    ``sum |delta|`` exceeds 0.3 rad.
    """
    delta = _angles_array(circuit, realization)
    budget = float(np.sum(np.abs(delta)))
    if budget > 0.3:
        warnings.warn(
            f"total over-rotation {budget:.3f} rad is large; the quadratic "
            "approximation may be inaccurate",
            stacklevel=2,
        )
    data = forward_sensitivity(circuit, psi0)
    combo = delta @ data.phi
    value = float(np.vdot(combo, combo).real) - float(delta @ data.means) ** 2
    return FragilityReport(
        method="perturbative",
        value=max(0.0, value),
        metadata={"angle_l1": budget},
    )


def fragility_avg(circuit: Circuit, psi0: StateVector | None = None) -> FragilityReport:
    """Noise-averaged quadratic fragility ``sum_s sigma_s^2 var(Q_s)``.

    The variance of each site operator is taken in the noise-free state
    right after the site's layer's gates.  Computed directly from the state
    trajectory, independently of the covariance-matrix route.
    """
    traj = _trajectory_arrays(circuit, psi0)
    contributions = np.zeros(circuit.num_noise_sites)
    for placed in circuit.noise_sites():
        sigma = placed.site.sigma
        if sigma == 0.0:
            continue
        var = placed.site.operator.variance(traj[placed.layer + 1])
        contributions[placed.ordinal] = sigma * sigma * var
    return FragilityReport(
        method="avg",
        value=float(np.add.reduce(contributions)),
        contributions=contributions,
    )


def overlap_incoherent(
    circuit: Circuit, psi0: StateVector | None = None
) -> FragilityReport:
    """Leading-order noise-averaged overlap ``1 - fragility_avg``.

    Approximates the average squared overlap ``E |<ideal|noisy>|^2`` to
    second order in the noise angles.
    """
    avg = fragility_avg(circuit, psi0)
    return FragilityReport(
        method="overlap",
        value=1.0 - avg.value,
        contributions=avg.contributions,
        metadata={"fragility_avg": avg.value},
    )


def fragility_mc(
    circuit: Circuit,
    seed: int,
    samples: int,
    statistic: str = "bures",
    psi0: StateVector | None = None,
    workers: int | None = None,
) -> FragilityReport:
    """Monte-Carlo average of an exact per-realization statistic.

    Statistics: ``bures`` (mean of 2(1-|f|)) and ``overlap``/``fidelity``
    (synonyms: mean |f|^2, the noise-averaged overlap).
    """
    if statistic not in ("bures", "overlap", "fidelity"):
        raise InputError(f"unknown statistic {statistic!r}")
    values = runners.mc_values(
        circuit, seed, samples, kind=statistic, psi0=psi0, workers=workers
    )
    mean, stderr = runners.summarize(values)
    return FragilityReport(
        method=f"mc_{statistic}",
        value=mean,
        stderr=stderr,
        metadata={"samples": int(samples), "seed": int(seed)},
    )
