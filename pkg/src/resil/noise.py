"""Noise sampling, standard channels, and coherent-noise attachment helpers.

Sampling contract (stable across versions, chunk sizes, and worker counts):
sample ``i`` owns the counter-based generator ``Philox(key = (i << 64) | seed)``
and draws exactly one uniform per noise site, in circuit site order.  The
uniform draws are then mapped through each site's angle distribution.  Any
partition of samples over workers therefore reproduces identical angles.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from resil.circuit import AngleDistribution, Circuit, Layer, NoiseSite
from resil.core import DensityMatrix, HermitianOperator, InputError

__all__ = [
    "inverse_normal_cdf",
    "NoiseRealization",
    "sample_angles",
    "sample_angle_matrix",
    "sample_normal_matrix",
    "BiasedNoiseSpec",
    "attach_biased_noise",
    "attach_overrotation_noise",
    "apply_bitflip",
    "apply_dephasing",
    "apply_depolarizing",
    "apply_biased_pauli",
    "coherent_channel_average",
]

_TINY = 5e-324  # smallest positive double; maps a raw 0.0 draw into (0, 1)

# Rational minimax coefficients for the inverse normal CDF (relative error
# ~2e-15 for draws down to 2**-53, the smallest value a 53-bit uniform RNG
# emits; the denormal extreme is still good to ~1e-8.  Central branch
# |u - 1/2| <= 0.425, tail branches split at sqrt(-log r) = 5).
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
      5.3941960214247511077e3, 2.1213794301586595867e4, 3.9307895800092710610e4,
      2.8729085735721942674e4, 5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
      6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
      1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7)


def _ratpoly(r: np.ndarray, num, den) -> np.ndarray:
    p = np.full_like(r, num[-1])
    for c in reversed(num[:-1]):
        p = p * r + c
    q = np.full_like(r, den[-1])
    for c in reversed(den[:-1]):
        q = q * r + c
    return p / q


def inverse_normal_cdf(u) -> np.ndarray:
    """Vectorized inverse CDF of the standard normal distribution.

    Accepts draws in [0, 1); an exact 0.0 is nudged to the smallest positive
    double.  Values outside [0, 1) raise :class:`InputError`.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.size and (np.min(u) < 0.0 or np.max(u) >= 1.0):
        raise InputError("uniform draws must lie in [0, 1)")
    u = np.maximum(u, _TINY)
    q = u - 0.5
    out = np.empty_like(u)
    central = np.abs(q) <= 0.425
    if np.any(central):
        r = 0.180625 - q[central] * q[central]
        out[central] = q[central] * _ratpoly(r, _A, _B)
    tail = ~central
    if np.any(tail):
        qt = q[tail]
        rt = np.where(qt < 0.0, u[tail], 1.0 - u[tail])
        rt = np.sqrt(-np.log(rt))
        near = rt <= 5.0
        x = np.empty_like(rt)
        x[near] = _ratpoly(rt[near] - 1.6, _C, _D)
        x[~near] = _ratpoly(rt[~near] - 5.0, _E, _F)
        out[tail] = np.where(qt < 0.0, -x, x)
    return out


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def _sample_rng(seed: int, sample_index: int) -> np.random.Generator:
    if not 0 <= int(seed) < (1 << 64):
        raise InputError("seed must fit in 64 bits")
    if sample_index < 0:
        raise InputError("sample_index must be >= 0")
    key = (int(sample_index) << 64) | int(seed)
    return np.random.Generator(np.random.Philox(key=key))


class NoiseRealization(dict):
    """One draw of all site angles: a ``{NoiseSite: angle}`` mapping.

    ``angles`` holds the same values as an array in circuit site order.
    """

    def __init__(self, circuit: Circuit, angles):
        angles = np.asarray(angles, dtype=np.float64)
        if angles.shape != (circuit.num_noise_sites,):
            raise InputError(
                f"expected {circuit.num_noise_sites} angles, got shape {angles.shape}"
            )
        super().__init__(
            (placed.site, float(angles[placed.ordinal]))
            for placed in circuit.noise_sites()
        )
        self.angles = angles


def _uniform_rows(n_sites: int, seed: int, start: int, count: int) -> np.ndarray:
    rows = np.empty((count, n_sites), dtype=np.float64)
    for i in range(count):
        rows[i] = _sample_rng(seed, start + i).random(n_sites)
    return rows


def sample_angle_matrix(
    circuit: Circuit, seed: int, start: int = 0, count: int = 1
) -> np.ndarray:
    """Angles for samples ``start .. start+count-1``, shape (count, n_sites)."""
    sites = [placed.site for placed in circuit.noise_sites()]
    u = _uniform_rows(len(sites), seed, start, count)
    out = np.empty_like(u)
    for j, site in enumerate(sites):
        out[:, j] = site.distribution.transform(u[:, j])
    return out


def sample_angles(circuit: Circuit, seed: int, sample_index: int = 0) -> NoiseRealization:
    """Draw one angle per noise site for the given sample index."""
    return NoiseRealization(
        circuit, sample_angle_matrix(circuit, seed, sample_index, 1)[0]
    )


def sample_normal_matrix(seed: int, start: int, count: int, n_draws: int) -> np.ndarray:
    """Standard-normal draws, shape (count, n_draws), same ownership contract."""
    return inverse_normal_cdf(_uniform_rows(n_draws, seed, start, count))


# ---------------------------------------------------------------------------
# Structured coherent-noise attachment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BiasedNoiseSpec:
    """Per-qubit biased coherent noise of total strength ``p``.

    Every layer adds an X over-rotation with variance ``eta_x * p / 2`` and
    a Z over-rotation with variance ``(1 - eta_x) * p / 2`` on every qubit,
    so the summed variance per qubit-layer is ``p / 2``.
    """

    p: float
    eta_x: float = 0.5
    kind: str = "two_point"

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InputError(f"noise strength p must be in [0, 1], got {self.p}")
        if not 0.0 <= self.eta_x <= 1.0:
            raise InputError(f"bias eta_x must be in [0, 1], got {self.eta_x}")
        AngleDistribution(self.kind, 0.0)  # validates the kind

    def sigmas(self) -> tuple[float, float]:
        return (
            math.sqrt(self.eta_x * self.p / 2.0),
            math.sqrt((1.0 - self.eta_x) * self.p / 2.0),
        )


def attach_biased_noise(circuit: Circuit, spec: BiasedNoiseSpec) -> Circuit:
    """Return a copy of ``circuit`` with X-then-Z sites on every qubit of
    every layer (existing noise is replaced)."""
    if spec.p > 0.05:
        warnings.warn(
            f"noise strength p = {spec.p} is large; quadratic averages may "
            "not track the exact channel",
            stacklevel=2,
        )
    sigma_x, sigma_z = spec.sigmas()
    dist_x = AngleDistribution(spec.kind, sigma_x)
    dist_z = AngleDistribution(spec.kind, sigma_z)
    n = circuit.n_qubits
    layers = []
    for layer in circuit.layers:
        noise = []
        for q in range(n):
            noise.append(NoiseSite(HermitianOperator.pauli(n, "X", (q,)), dist_x))
            noise.append(NoiseSite(HermitianOperator.pauli(n, "Z", (q,)), dist_z))
        layers.append(Layer(layer.gates, noise))
    return Circuit(n, layers, circuit.initial_state)


def attach_overrotation_noise(circuit: Circuit, distribution: AngleDistribution) -> Circuit:
    """Return a copy with one site per gate, over-rotating that gate.

    Each gate's generator must be a scaled Pauli string (plus an optional
    identity shift, which only contributes a global phase): over-rotating
    ``exp(-i(theta + delta) c P)`` equals an extra ``exp(-i (c delta) P)``.
    The site's sigma is ``|c| * distribution.sigma`` and the site records
    its paired gate.
    """
    n = circuit.n_qubits
    layers = []
    for li, layer in enumerate(circuit.layers):
        noise = list(layer.noise)
        for gi, gate in enumerate(layer.gates):
            gen = gate.global_generator(n)
            nontrivial = [(key, c) for key, c in gen.terms if key]
            if len(nontrivial) != 1:
                raise InputError(
                    f"layers[{li}].gates[{gi}] ({gate.name!r}): generator is not "
                    "a scaled Pauli string; over-rotation sites need rotation gates"
                )
            key, c = nontrivial[0]
            op = HermitianOperator(n, [(1.0, key)])
            dist = AngleDistribution(distribution.kind, abs(c) * distribution.sigma)
            noise.append(NoiseSite(op, dist, paired_gate=(li, gi)))
        layers.append(Layer(layer.gates, noise))
    return Circuit(n, layers, circuit.initial_state)


# ---------------------------------------------------------------------------
# Standard channels on density matrices
# ---------------------------------------------------------------------------

def _check_probability(p: float, limit: float) -> float:
    p = float(p)
    if not 0.0 <= p <= limit:
        raise InputError(f"channel probability must lie in [0, {limit:g}], got {p!r}")
    return p


def _pauli_mix(rho: DensityMatrix, q: int, letter: str, weight: float) -> DensityMatrix:
    op = HermitianOperator.pauli(rho.n_qubits, letter, (q,))
    xm, zm, ny = op._masks[0]
    return rho.scaled(1.0 - weight) + rho.sandwich_pauli(xm, zm, ny).scaled(weight)


def apply_bitflip(rho: DensityMatrix, q: int, p: float) -> DensityMatrix:
    """X conjugation with probability p/2 (the coherent two-point average)."""
    return _pauli_mix(rho, q, "X", _check_probability(p, 2.0) / 2.0)


def apply_dephasing(rho: DensityMatrix, q: int, p: float) -> DensityMatrix:
    """Z conjugation with probability p/2."""
    return _pauli_mix(rho, q, "Z", _check_probability(p, 2.0) / 2.0)


def apply_depolarizing(rho: DensityMatrix, q: int, p: float) -> DensityMatrix:
    """(1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z); p = 3/4 fully mixes."""
    p = _check_probability(p, 1.0)
    out = rho.scaled(1.0 - p)
    for letter in "XYZ":
        op = HermitianOperator.pauli(rho.n_qubits, letter, (q,))
        xm, zm, ny = op._masks[0]
        out = out + rho.sandwich_pauli(xm, zm, ny).scaled(p / 3.0)
    return out


def apply_biased_pauli(rho: DensityMatrix, q: int, p: float, eta_x: float) -> DensityMatrix:
    """X flip of weight eta_x*p/2 followed by a Z flip of weight (1-eta_x)*p/2."""
    if not 0.0 <= eta_x <= 1.0:
        raise InputError(f"eta_x must lie in [0, 1], got {eta_x!r}")
    p = _check_probability(p, 2.0)
    return apply_dephasing(apply_bitflip(rho, q, eta_x * p), q, (1.0 - eta_x) * p)


def coherent_channel_average(
    rho: DensityMatrix,
    operator: HermitianOperator,
    distribution: AngleDistribution,
    mode: str = "exact",
    samples: int = 2048,
    seed: int = 0,
) -> DensityMatrix:
    """Average of ``e^{-i delta P} rho e^{+i delta P}`` over the angle law.

    ``exact`` uses the closed form ``(1-s) rho + s P rho P`` with
    ``s = E[sin^2 delta]``; ``monte_carlo`` estimates the same average from
    sampled angles (zero-mean laws make the cross term vanish).
    """
    terms = operator.terms
    if len(terms) != 1 or terms[0][1] != 1.0 or not terms[0][0]:
        raise InputError("coherent averaging needs a unit Pauli string")
    xm, zm, ny = operator._masks[0]
    if mode == "exact":
        s = distribution.s_value()
        return rho.scaled(1.0 - s) + rho.sandwich_pauli(xm, zm, ny).scaled(s)
    if mode != "monte_carlo":
        raise InputError(f"unknown mode {mode!r}")
    u = _uniform_rows(1, seed, 0, samples)[:, 0]
    deltas = distribution.transform(u)
    acc = np.zeros_like(rho.matrix)
    for delta in deltas:
        acc += rho.rotated(operator, float(delta)).matrix
    return DensityMatrix(rho.n_qubits, acc / samples, copy=False)
