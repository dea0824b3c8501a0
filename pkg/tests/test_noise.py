"""Noise sampling and channel tests: RNG contracts, closed forms, channels."""

from __future__ import annotations

import statistics
import warnings

import numpy as np
import pytest
from helpers import pauli_string_dense, random_state
from scipy.integrate import quad
from scipy.special import ndtri

from resil.circuit import (
    AngleDistribution,
    Circuit,
    Gate,
    Layer,
    NoiseSite,
    simulate_noisy,
)
from resil.core import DensityMatrix, HermitianOperator, InputError, StateVector
from resil.noise import (
    BiasedNoiseSpec,
    NoiseRealization,
    apply_biased_pauli,
    apply_bitflip,
    apply_dephasing,
    apply_depolarizing,
    attach_biased_noise,
    attach_overrotation_noise,
    coherent_channel_average,
    inverse_normal_cdf,
    sample_angle_matrix,
    sample_angles,
    sample_normal_matrix,
)

# ---------------------------------------------------------------------------
# inverse_normal_cdf
# ---------------------------------------------------------------------------


def test_inverse_normal_cdf_matches_references():
    # 2**-53 is the smallest draw a 53-bit uniform generator can produce
    u = np.concatenate(
        [
            np.linspace(1e-12, 1 - 1e-12, 2001),
            [2.0**-53, 1e-15, 0.5, 1 - 1e-15, 1 - 2.0**-16],
        ]
    )
    got = inverse_normal_cdf(u)
    ref = ndtri(u)
    np.testing.assert_allclose(got, ref, rtol=5e-14, atol=1e-13)
    nd = statistics.NormalDist()
    for x in (0.012, 0.345, 0.5, 0.789, 0.9999):
        assert inverse_normal_cdf(np.array([x]))[0] == pytest.approx(
            nd.inv_cdf(x), rel=1e-12
        )
    # the denormal extreme (a nudged raw 0.0) stays sane
    assert inverse_normal_cdf(np.array([5e-324]))[0] == pytest.approx(
        ndtri(5e-324), rel=1e-7
    )


def test_inverse_normal_cdf_domain():
    assert np.isfinite(inverse_normal_cdf(np.array([0.0]))[0])
    with pytest.raises(InputError):
        inverse_normal_cdf(np.array([1.0]))
    with pytest.raises(InputError):
        inverse_normal_cdf(np.array([-0.1]))


# ---------------------------------------------------------------------------
# s_value closed forms vs quadrature
# ---------------------------------------------------------------------------


def _s_oracle(kind: str, sigma: float) -> float:
    """E[sin^2 delta] by direct quadrature over the angle law."""
    if kind == "two_point":
        return float(np.sin(sigma) ** 2)
    if kind == "gaussian":
        f = lambda x: np.sin(x) ** 2 * np.exp(-x * x / (2 * sigma**2))
        val, _ = quad(f, -10 * sigma, 10 * sigma, epsabs=1e-14, epsrel=1e-13)
        return val / (sigma * np.sqrt(2 * np.pi))
    if kind == "uniform":
        half = sigma * np.sqrt(3.0)
        val, _ = quad(lambda x: np.sin(x) ** 2, -half, half, epsabs=1e-14)
        return val / (2 * half)
    raise ValueError(kind)


@pytest.mark.parametrize("kind", ["two_point", "gaussian", "uniform"])
@pytest.mark.parametrize("sigma", [0.01, 0.1, 0.5, 1.3])
def test_s_value_matches_quadrature(kind, sigma):
    dist = AngleDistribution(kind, sigma)
    assert dist.s_value() == pytest.approx(_s_oracle(kind, sigma), rel=1e-10)


@pytest.mark.parametrize("kind", ["two_point", "gaussian", "uniform"])
def test_s_value_close_to_variance_for_small_sigma(kind):
    for sigma in (0.001, 0.01, 0.05, 0.2):
        s = AngleDistribution(kind, sigma).s_value()
        assert abs(s - sigma**2) <= sigma**4


def test_sin_cos_cross_term_vanishes():
    # E[sin(d) cos(d)] = E[sin(2d)]/2 = 0 for all three zero-mean laws
    for kind in ("two_point", "gaussian", "uniform"):
        dist = AngleDistribution(kind, 0.4)
        u = (np.arange(200000) + 0.5) / 200000
        d = dist.transform(u)
        assert np.mean(np.sin(d) * np.cos(d)) == pytest.approx(0.0, abs=1e-5)


# ---------------------------------------------------------------------------
# Sampling contracts
# ---------------------------------------------------------------------------


def _noisy_circuit(n_layers: int = 3) -> Circuit:
    dist = AngleDistribution("gaussian", 0.1)
    layers = []
    for li in range(n_layers):
        site_a = NoiseSite(HermitianOperator.pauli(2, "Z", qubits=[0]), dist)
        site_b = NoiseSite(
            HermitianOperator.pauli(2, "X", qubits=[1]),
            AngleDistribution("uniform", 0.2),
        )
        layers.append(Layer([Gate.h(0)], noise=[site_a, site_b]))
    return Circuit(2, layers)


def test_sample_angle_matrix_shape_and_determinism():
    circ = _noisy_circuit()
    a = sample_angle_matrix(circ, seed=7, start=0, count=5)
    assert a.shape == (5, circ.num_noise_sites)
    b = sample_angle_matrix(circ, seed=7, start=0, count=5)
    assert np.array_equal(a, b)
    c = sample_angle_matrix(circ, seed=8, start=0, count=5)
    assert not np.array_equal(a, c)


def test_sample_chunks_are_byte_identical():
    # drawing [0, 10) in one call equals stacking [0, 3), [3, 7), [7, 10)
    circ = _noisy_circuit()
    whole = sample_angle_matrix(circ, seed=42, start=0, count=10)
    parts = np.vstack(
        [
            sample_angle_matrix(circ, seed=42, start=0, count=3),
            sample_angle_matrix(circ, seed=42, start=3, count=4),
            sample_angle_matrix(circ, seed=42, start=7, count=3),
        ]
    )
    assert np.array_equal(whole, parts)


def test_sample_angles_realization():
    circ = _noisy_circuit()
    real = sample_angles(circ, seed=3, sample_index=2)
    assert isinstance(real, NoiseRealization)
    assert real.angles.shape == (circ.num_noise_sites,)
    expected = sample_angle_matrix(circ, seed=3, start=2, count=1)[0]
    assert np.array_equal(real.angles, expected)
    for placed in circ.noise_sites():
        assert real[placed.site] == expected[placed.ordinal]
    # usable directly as a realization
    simulate_noisy(circ, real)


def test_sample_normal_matrix_is_standard_normal():
    draws = sample_normal_matrix(seed=0, start=0, count=4000, n_draws=2)
    assert draws.shape == (4000, 2)
    assert np.mean(draws) == pytest.approx(0.0, abs=0.05)
    assert np.std(draws) == pytest.approx(1.0, abs=0.05)
    again = sample_normal_matrix(seed=0, start=0, count=4000, n_draws=2)
    assert np.array_equal(draws, again)


def test_seed_and_index_validation():
    circ = _noisy_circuit()
    with pytest.raises(InputError):
        sample_angle_matrix(circ, seed=1 << 64, start=0, count=1)
    with pytest.raises(InputError):
        sample_angle_matrix(circ, seed=-1, start=0, count=1)
    with pytest.raises(InputError):
        sample_angle_matrix(circ, seed=0, start=-1, count=1)


def test_noise_realization_length_check():
    circ = _noisy_circuit()
    with pytest.raises(InputError):
        NoiseRealization(circ, np.zeros(circ.num_noise_sites + 1))


# ---------------------------------------------------------------------------
# Structured attachment
# ---------------------------------------------------------------------------


def test_biased_spec_sigmas():
    spec = BiasedNoiseSpec(p=0.02, eta_x=0.25)
    sx, sz = spec.sigmas()
    assert sx**2 == pytest.approx(0.25 * 0.01)
    assert sz**2 == pytest.approx(0.75 * 0.01)
    with pytest.raises(InputError):
        BiasedNoiseSpec(p=-0.1, eta_x=0.5)
    with pytest.raises(InputError):
        BiasedNoiseSpec(p=0.1, eta_x=1.5)


def test_attach_biased_noise_structure():
    base = Circuit(2, [Layer([Gate.h(0)]), Layer([Gate.cx(0, 1)])])
    spec = BiasedNoiseSpec(p=0.01, eta_x=0.3)
    noisy = attach_biased_noise(base, spec)
    assert noisy.num_noise_sites == 2 * 2 * 2  # X and Z per qubit per layer
    sx, sz = spec.sigmas()
    for layer in noisy.layers:
        # X site precedes Z site for each qubit
        kinds = []
        for site in layer.noise:
            ((q, letter),) = site.operator.terms[0][0]
            kinds.append((q, letter))
            assert site.sigma == pytest.approx(sx if letter == "X" else sz)
        assert kinds == [(0, "X"), (0, "Z"), (1, "X"), (1, "Z")]


def test_attach_biased_noise_replaces_existing_sites():
    circ = _noisy_circuit()
    out = attach_biased_noise(circ, BiasedNoiseSpec(p=0.01, eta_x=0.5))
    assert out.num_noise_sites == 2 * 2 * circ.depth
    for layer in out.layers:
        for site in layer.noise:
            assert site.distribution.kind == "two_point"


def test_attach_biased_noise_warns_outside_perturbative_regime():
    base = Circuit(1, [Layer([Gate.h(0)])])
    with pytest.warns(UserWarning):
        attach_biased_noise(base, BiasedNoiseSpec(p=0.2, eta_x=0.5))


def test_attach_overrotation_noise():
    circ = Circuit(
        2,
        [
            Layer([Gate.rx(0, 0.5), Gate.rz(1, 0.3)]),
            Layer([Gate.ry(0, -0.2)]),
        ],
    )
    dist = AngleDistribution("gaussian", 0.02)
    noisy = attach_overrotation_noise(circ, dist)
    placed = list(noisy.noise_sites())
    assert len(placed) == 3
    # each site pairs with its gate; generator 0.5*P gives sigma = 0.5*dist.sigma
    for p in placed:
        assert p.site.paired_gate is not None
        li, gi = p.site.paired_gate
        assert p.layer == li
        gate = noisy.layers[li].gates[gi]
        ((q, letter),) = p.site.operator.terms[0][0]
        assert gate.qubits == (q,)
        assert letter == gate.name[1].upper()
        assert p.site.sigma == pytest.approx(0.5 * 0.02)


def test_attach_overrotation_appends_to_existing_noise():
    dist = AngleDistribution("two_point", 0.1)
    keep = NoiseSite(HermitianOperator.pauli(1, "Z", qubits=[0]), dist)
    circ = Circuit(1, [Layer([Gate.rx(0, 0.4)], noise=[keep])])
    out = attach_overrotation_noise(circ, AngleDistribution("gaussian", 0.05))
    sites = [p.site for p in out.noise_sites()]
    assert len(sites) == 2
    assert sites[0].operator == keep.operator  # original site kept, first
    assert sites[1].paired_gate == (0, 0)


def test_attach_overrotation_rejects_multi_term_generators():
    dist = AngleDistribution("gaussian", 0.02)
    with pytest.raises(InputError):
        attach_overrotation_noise(Circuit(1, [Layer([Gate.h(0)])]), dist)
    with pytest.raises(InputError):
        attach_overrotation_noise(Circuit(2, [Layer([Gate.cx(0, 1)])]), dist)
    # a rot gate whose generator is a single Pauli term is acceptable
    gen = HermitianOperator(2, [(0.7, [(0, "X"), (1, "X")])])
    out = attach_overrotation_noise(
        Circuit(2, [Layer([Gate.rot(gen, 0.3)])]), dist
    )
    site = next(iter(out.noise_sites())).site
    assert site.sigma == pytest.approx(0.7 * 0.02)
    ((q0, l0), (q1, l1)) = site.operator.terms[0][0]
    assert (q0, l0, q1, l1) == (0, "X", 1, "X")


# ---------------------------------------------------------------------------
# Channels
# ---------------------------------------------------------------------------


def _random_rho(rng: np.random.Generator, n: int) -> DensityMatrix:
    # mixture of two random pure states
    a = random_state(rng, n)
    b = random_state(rng, n)
    m = 0.6 * np.outer(a, a.conj()) + 0.4 * np.outer(b, b.conj())
    return DensityMatrix(n, m)


def _channel_oracle(rho: DensityMatrix, ops: list[tuple[float, np.ndarray]]):
    out = np.zeros_like(rho.matrix)
    for w, p in ops:
        out += w * (p @ rho.matrix @ p.conj().T)
    return out


@pytest.mark.parametrize("q", [0, 1])
def test_bitflip_and_dephasing_match_dense(q):
    # the channels flip with probability p/2 (the coherent-average convention)
    rng = np.random.default_rng(40 + q)
    rho = _random_rho(rng, 2)
    x = pauli_string_dense({q: "X"}, 2)
    z = pauli_string_dense({q: "Z"}, 2)
    p = 0.13
    np.testing.assert_allclose(
        apply_bitflip(rho, q, p).matrix,
        _channel_oracle(rho, [(1 - p / 2, np.eye(4)), (p / 2, x)]),
        atol=1e-14,
    )
    np.testing.assert_allclose(
        apply_dephasing(rho, q, p).matrix,
        _channel_oracle(rho, [(1 - p / 2, np.eye(4)), (p / 2, z)]),
        atol=1e-14,
    )


def test_dephasing_scales_coherences_by_one_minus_p():
    rho = DensityMatrix.from_state(StateVector.plus(1))
    p = 0.3
    out = apply_dephasing(rho, 0, p)
    assert out.matrix[0, 1] == pytest.approx((1 - p) * rho.matrix[0, 1], abs=1e-15)
    assert out.matrix[0, 0] == pytest.approx(rho.matrix[0, 0], abs=1e-15)


def test_depolarizing_matches_dense_and_fixed_point():
    rng = np.random.default_rng(42)
    rho = _random_rho(rng, 2)
    p = 0.3
    q = 1
    ops = [(1 - p, np.eye(4))] + [
        (p / 3, pauli_string_dense({q: letter}, 2)) for letter in "XYZ"
    ]
    np.testing.assert_allclose(
        apply_depolarizing(rho, q, p).matrix, _channel_oracle(rho, ops), atol=1e-14
    )
    # p = 3/4 sends any single-qubit state to the maximally mixed state
    psi = random_state(rng, 1)
    rho1 = DensityMatrix(1, np.outer(psi, psi.conj()))
    out = apply_depolarizing(rho1, 0, 0.75)
    np.testing.assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-12)


def test_biased_pauli_is_x_then_z():
    rng = np.random.default_rng(43)
    rho = _random_rho(rng, 1)
    p, eta = 0.04, 0.3
    out = apply_biased_pauli(rho, 0, p, eta)
    x = pauli_string_dense({0: "X"}, 1)
    z = pauli_string_dense({0: "Z"}, 1)
    wx, wz = eta * p / 2, (1 - eta) * p / 2
    step1 = _channel_oracle(rho, [(1 - wx, np.eye(2)), (wx, x)])
    expected = (1 - wz) * step1 + wz * (z @ step1 @ z)
    np.testing.assert_allclose(out.matrix, expected, atol=1e-14)


def test_channels_preserve_trace_and_positivity():
    rng = np.random.default_rng(44)
    rho = _random_rho(rng, 2)
    outs = [
        apply_bitflip(rho, 0, 0.2),
        apply_dephasing(rho, 1, 0.35),
        apply_depolarizing(rho, 0, 0.6),
        apply_biased_pauli(rho, 1, 0.1, 0.7),
        coherent_channel_average(
            rho, HermitianOperator.pauli(2, "Y", qubits=[0]), AngleDistribution("gaussian", 0.3)
        ),
    ]
    for out in outs:
        assert abs(out.trace() - 1.0) < 1e-12
        assert out.hermiticity_defect() < 1e-12
        assert out.min_eigenvalue() >= -1e-10


def test_coherent_average_exact_matches_dense_form():
    rng = np.random.default_rng(45)
    rho = _random_rho(rng, 2)
    for kind, sigma in (("two_point", 0.4), ("gaussian", 0.25), ("uniform", 0.3)):
        dist = AngleDistribution(kind, sigma)
        op = HermitianOperator.pauli(2, "XZ")
        out = coherent_channel_average(rho, op, dist, mode="exact")
        s = dist.s_value()
        p_dense = pauli_string_dense({0: "X", 1: "Z"}, 2)
        expected = (1 - s) * rho.matrix + s * (p_dense @ rho.matrix @ p_dense)
        np.testing.assert_allclose(out.matrix, expected, atol=1e-14)


def test_coherent_two_point_average_equals_dephasing():
    rng = np.random.default_rng(46)
    rho = _random_rho(rng, 2)
    sigma = 0.2
    avg = coherent_channel_average(
        rho,
        HermitianOperator.pauli(2, "Z", qubits=[0]),
        AngleDistribution("two_point", sigma),
        mode="exact",
    )
    # p = 2 sin^2(sigma): dephasing applies Z with weight p/2 = sin^2(sigma)
    deph = apply_dephasing(rho, 0, 2 * np.sin(sigma) ** 2)
    np.testing.assert_allclose(avg.matrix, deph.matrix, atol=1e-15)


def test_coherent_average_monte_carlo_agrees():
    rng = np.random.default_rng(47)
    rho = _random_rho(rng, 1)
    dist = AngleDistribution("uniform", 0.3)
    op = HermitianOperator.pauli(1, "Y", qubits=[0])
    exact = coherent_channel_average(rho, op, dist, mode="exact")
    mc = coherent_channel_average(rho, op, dist, mode="monte_carlo", samples=20000, seed=5)
    assert np.max(np.abs(mc.matrix - exact.matrix)) < 3e-3
    again = coherent_channel_average(rho, op, dist, mode="monte_carlo", samples=20000, seed=5)
    assert np.array_equal(mc.matrix, again.matrix)


def test_coherent_average_validation():
    rho = DensityMatrix.from_state(StateVector.zero(1))
    dist = AngleDistribution("gaussian", 0.1)
    with pytest.raises(InputError):
        coherent_channel_average(rho, HermitianOperator.identity(1), dist)
    with pytest.raises(InputError):
        coherent_channel_average(
            rho, 2.0 * HermitianOperator.pauli(1, "X", qubits=[0]), dist
        )
    with pytest.raises(InputError):
        coherent_channel_average(
            rho, HermitianOperator.pauli(1, "X", qubits=[0]), dist, mode="qmc"
        )


def test_channel_probability_validation():
    rho = DensityMatrix.from_state(StateVector.zero(1))
    with pytest.raises(InputError):
        apply_bitflip(rho, 0, -0.01)
    with pytest.raises(InputError):
        apply_dephasing(rho, 0, 2.5)  # flip probability p/2 may not exceed 1
    apply_dephasing(rho, 0, 1.5)  # p in (1, 2] is a valid flip probability
    with pytest.raises(InputError):
        apply_depolarizing(rho, 0, 1.2)
    with pytest.raises(InputError):
        apply_biased_pauli(rho, 0, 0.1, 1.2)
    with pytest.raises(InputError):
        apply_biased_pauli(rho, 0, -0.1, 0.5)
