"""Digital fragility tests: closed forms, dual routes, Monte-Carlo contracts."""

from __future__ import annotations

import numpy as np
import pytest
from helpers import overrotated, random_rotation_circuit, random_state

from resil.circuit import (
    AngleDistribution,
    Circuit,
    Gate,
    Layer,
    NoiseSite,
)
from resil.core import HermitianOperator, InputError, StateVector
from resil.digital import (
    forward_sensitivity,
    fragility_avg,
    fragility_exact,
    fragility_mc,
    fragility_perturbative,
    noise_gram,
    overlap_incoherent,
)
from resil.runners import mc_values, summarize

# ---------------------------------------------------------------------------
# Closed-form single-site case: Z noise on |+>
# ---------------------------------------------------------------------------


def _plus_z_circuit(sigma: float = 0.1, kind: str = "two_point") -> Circuit:
    site = NoiseSite(
        HermitianOperator.pauli(1, "Z", qubits=[0]),
        AngleDistribution(kind, sigma),
    )
    return Circuit(
        1, [Layer([Gate.h(0)], noise=[site])], initial_state=StateVector.zero(1)
    )


def test_exact_fragility_closed_form():
    # exp(-i d Z)|+> has overlap cos(d) with |+>: F = 2(1 - cos d)
    circ = _plus_z_circuit()
    for d in (0.0, 0.05, 0.4, 1.2):
        rep = fragility_exact(circ, [d])
        assert rep.value == pytest.approx(2 * (1 - np.cos(d)), abs=1e-14)
        assert rep.method == "exact"
        assert rep.metadata["overlap"] == pytest.approx(abs(np.cos(d)), abs=1e-14)


def test_perturbative_fragility_closed_form():
    # var(Z) = 1 on |+>: quadratic form gives exactly d^2
    circ = _plus_z_circuit()
    rep = fragility_perturbative(circ, [0.05])
    assert rep.value == pytest.approx(0.05**2, abs=1e-15)
    assert rep.method == "perturbative"
    assert rep.metadata["angle_l1"] == pytest.approx(0.05)


def test_avg_fragility_closed_form():
    circ = _plus_z_circuit(sigma=0.07)
    rep = fragility_avg(circ)
    assert rep.value == pytest.approx(0.07**2, abs=1e-15)
    assert rep.method == "avg"
    np.testing.assert_allclose(rep.contributions, [0.07**2], atol=1e-15)


def test_two_point_mc_mean_is_exact_constant():
    # two-point noise always rotates by +-sigma, and bures depends on |cos|:
    # every sample equals 2(1 - cos sigma), so the MC mean is exact
    circ = _plus_z_circuit(sigma=0.01)
    rep = fragility_mc(circ, seed=1, samples=64)
    assert rep.value == pytest.approx(2 * (1 - np.cos(0.01)), abs=1e-15)
    assert rep.stderr == pytest.approx(0.0, abs=1e-16)
    assert rep.method == "mc_bures"
    assert rep.metadata == {"samples": 64, "seed": 1}


# ---------------------------------------------------------------------------
# Sensitivity data and the covariance matrix
# ---------------------------------------------------------------------------


def _random_noisy_circuit(seed: int, n: int = 4, depth: int = 6) -> Circuit:
    from resil.models import random_pauli_sites

    rng = np.random.default_rng(seed)
    circ = random_rotation_circuit(rng, n, depth, p_cx=0.5)
    return random_pauli_sites(circ, seed=seed + 100, sigma=0.01, sites_per_layer=2)


def test_forward_sensitivity_shapes_and_means():
    circ = _random_noisy_circuit(0)
    data = forward_sensitivity(circ)
    n_sites = circ.num_noise_sites
    assert data.phi.shape == (n_sites, 1 << circ.n_qubits)
    assert data.means.shape == (n_sites,)
    assert len(data.sites) == n_sites
    # means are the noise-operator expectations in the propagated frame;
    # row s of phi is U(after s) Q_s |psi after site s's layer>
    from resil.circuit import simulate_trajectory

    traj = simulate_trajectory(circ)
    for idx, placed in enumerate(circ.noise_sites()):
        psi_l = traj[placed.layer + 1].amplitudes
        expect = placed.site.operator.expectation(psi_l)
        assert data.means[idx] == pytest.approx(expect, abs=1e-12)


def test_noise_gram_is_psd_with_variance_diagonal():
    for seed in range(5):
        circ = _random_noisy_circuit(seed)
        g = noise_gram(circ)
        # symmetric
        np.testing.assert_allclose(g, g.T, atol=1e-13)
        # PSD within roundoff
        assert np.linalg.eigvalsh(g)[0] >= -1e-10
        # diagonal equals the per-site variances used by fragility_avg
        avg = fragility_avg(circ)
        sigmas = np.array([p.site.sigma for p in circ.noise_sites()])
        np.testing.assert_allclose(
            np.diag(g) * sigmas**2, avg.contributions, atol=1e-12
        )


def test_perturbative_equals_quadratic_form():
    # dual route: the optimized implementation must match delta^T G delta
    rng = np.random.default_rng(7)
    for seed in range(5):
        circ = _random_noisy_circuit(seed)
        delta = 0.01 * rng.standard_normal(circ.num_noise_sites)
        rep = fragility_perturbative(circ, delta)
        g = noise_gram(circ)
        assert rep.value == pytest.approx(float(delta @ g @ delta), abs=1e-12)


def test_avg_is_trace_of_weighted_gram():
    for seed in range(3):
        circ = _random_noisy_circuit(seed)
        g = noise_gram(circ)
        sigmas = np.array([p.site.sigma for p in circ.noise_sites()])
        assert fragility_avg(circ).value == pytest.approx(
            float(np.sum(np.diag(g) * sigmas**2)), abs=1e-12
        )


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_perturbative_matches_exact_to_cubic_order(seed):
    # the quadratic form misses the exact value by O(scale^3): a log-log fit
    # of the defect against the angle scale must have slope >= 2.7
    circ = _random_noisy_circuit(seed)
    rng = np.random.default_rng(seed + 1000)
    signs = rng.choice([-1.0, 1.0], size=circ.num_noise_sites)
    scales = np.array([0.04, 0.02, 0.01, 0.005])
    defects = []
    for s in scales:
        delta = signs * (s / circ.num_noise_sites)
        exact = fragility_exact(circ, delta).value
        pert = fragility_perturbative(circ, delta).value
        defects.append(abs(exact - pert))
    slope = np.polyfit(np.log(scales), np.log(defects), 1)[0]
    assert slope >= 2.7, (slope, defects)


def test_global_phase_invariance():
    # an identity-generator "gate" shifts global phase only; every fragility
    # functional must be invariant
    circ = _random_noisy_circuit(4)
    layers = list(circ.layers)
    phase_gate = Gate.rot(
        HermitianOperator.identity(1, 1.0), 0.77, qubits=(0,), name="phase"
    )
    shifted = Circuit(circ.n_qubits, [Layer([phase_gate])] + layers)
    delta = np.full(circ.num_noise_sites, 0.004)
    assert fragility_avg(shifted).value == pytest.approx(
        fragility_avg(circ).value, abs=1e-12
    )
    assert fragility_perturbative(shifted, delta).value == pytest.approx(
        fragility_perturbative(circ, delta).value, abs=1e-12
    )
    assert fragility_exact(shifted, delta).value == pytest.approx(
        fragility_exact(circ, delta).value, abs=1e-12
    )


def test_zero_sigma_sites_do_not_contribute_to_avg():
    dist0 = AngleDistribution("gaussian", 0.0)
    dist = AngleDistribution("gaussian", 0.1)
    quiet = NoiseSite(HermitianOperator.pauli(1, "X", qubits=[0]), dist0)
    loud = NoiseSite(HermitianOperator.pauli(1, "Z", qubits=[0]), dist)
    circ = Circuit(1, [Layer([Gate.h(0)], noise=[quiet, loud])])
    rep = fragility_avg(circ)
    assert rep.contributions[0] == 0.0
    assert rep.value == pytest.approx(0.01, abs=1e-15)


def test_overlap_incoherent_fields():
    circ = _random_noisy_circuit(2)
    avg = fragility_avg(circ)
    ov = overlap_incoherent(circ)
    assert ov.method == "overlap"
    assert ov.value == pytest.approx(1.0 - avg.value, abs=1e-15)
    assert ov.metadata["fragility_avg"] == pytest.approx(avg.value, abs=1e-15)
    np.testing.assert_array_equal(ov.contributions, avg.contributions)


def test_perturbative_budget_warning():
    circ = _plus_z_circuit()
    with pytest.warns(UserWarning):
        fragility_perturbative(circ, [0.4])


def test_angles_array_validation():
    circ = _plus_z_circuit()
    with pytest.raises(InputError):
        fragility_perturbative(circ, [0.1, 0.2])
    with pytest.raises(InputError):
        fragility_exact(circ, np.zeros((1, 1)))


def test_psi0_override():
    circ = _plus_z_circuit()
    # starting in |1> instead of |0>: H|1> = |-> and var(Z) is still 1
    rep = fragility_avg(circ, psi0=StateVector.basis(1, 1))
    assert rep.value == pytest.approx(0.1**2, abs=1e-15)


def test_fragility_mc_statistic_validation():
    circ = _plus_z_circuit()
    with pytest.raises(InputError):
        fragility_mc(circ, seed=0, samples=8, statistic="trace_distance")


# ---------------------------------------------------------------------------
# Monte-Carlo runner contracts
# ---------------------------------------------------------------------------


def test_mc_values_deterministic_across_workers_and_chunks():
    circ = _random_noisy_circuit(5)
    base = mc_values(circ, seed=9, samples=50, kind="bures", workers=1)
    rechunked = mc_values(circ, seed=9, samples=50, kind="bures", workers=1, chunk=16)
    parallel = mc_values(circ, seed=9, samples=50, kind="bures", workers=2, chunk=16)
    assert np.array_equal(base, rechunked)
    assert np.array_equal(base, parallel)


def test_mc_values_statistics_are_consistent():
    circ = _random_noisy_circuit(6)
    bures = mc_values(circ, seed=3, samples=40, kind="bures")
    overlap = mc_values(circ, seed=3, samples=40, kind="overlap")
    fidelity = mc_values(circ, seed=3, samples=40, kind="fidelity")
    assert np.array_equal(overlap, fidelity)
    # per-sample identity: bures = 2(1 - sqrt(overlap))
    np.testing.assert_allclose(bures, 2 * (1 - np.sqrt(overlap)), atol=1e-12)


def test_mc_statistics_match_formulas_within_stderr():
    circ = _random_noisy_circuit(8)
    rep = fragility_mc(circ, seed=0, samples=4000)
    avg = fragility_avg(circ)
    assert abs(rep.value - avg.value) < 3 * rep.stderr
    rep_ov = fragility_mc(circ, seed=0, samples=4000, statistic="overlap")
    ov = overlap_incoherent(circ)
    assert abs(rep_ov.value - ov.value) < 3 * rep_ov.stderr


def test_summarize():
    mean, err = summarize(np.array([1.0, 2.0, 3.0, 4.0]))
    assert mean == pytest.approx(2.5)
    assert err == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2.0)
    _, inf_err = summarize(np.array([1.0]))
    assert inf_err == np.inf


def test_mc_values_kind_validation():
    circ = _plus_z_circuit()
    with pytest.raises(InputError):
        mc_values(circ, seed=0, samples=4, kind="chaos")


def test_report_to_dict():
    circ = _plus_z_circuit(sigma=0.05)
    rep = fragility_avg(circ)
    doc = rep.to_dict()
    assert doc["method"] == "avg"
    assert doc["value"] == pytest.approx(0.0025)
    assert isinstance(doc["contributions"], list)
