"""Noise sensitivity of cost-function expectation values.

For a Hermitian cost observable C measured on the final state, the shift of
<C> under an over-rotation ``delta`` at site s is ``-w_s delta + O(delta^2)``
with the sensitivity weight ``w_s = 2 Im <phi_s | C | psi_final>`` built
from the same forward-propagated vectors as the state fragility.  The
squared shift averages to ``sum_s sigma_s^2 w_s^2`` over independent
zero-mean noise; the analog counterpart integrates
``gamma(t) * (2 Im <Q psi_t | chi_t>)^2`` with ``chi_t`` the cost vector
``C psi_T`` pulled back to time t.
"""

from __future__ import annotations

import numpy as np

from resil import runners
from resil.analog import (
    AnalogNoise,
    Schedule,
    _BASE_M,
    _MAX_LEVEL,
    _forward_segment,
    _plan_segments,
    _simpson,
)
from resil.circuit import Circuit, _trajectory_arrays, simulate_noisy
from resil.core import HermitianOperator, NumericalError, StateVector
from resil.digital import (
    FragilityReport,
    SensitivityData,
    _angles_array,
    forward_sensitivity,
)

__all__ = [
    "cost_weights",
    "cost_fragility_exact",
    "cost_fragility_perturbative",
    "cost_fragility_avg",
    "cost_mc_average",
    "cost_fragility_analog",
    "cost_bound_check",
    "projector_cost_identity",
]


def cost_weights(
    circuit: Circuit,
    cost_op: HermitianOperator,
    psi0: StateVector | None = None,
    data: SensitivityData | None = None,
) -> np.ndarray:
    """Per-site sensitivities ``w_s``; ``d<C>/d delta_s = -w_s`` at zero noise."""
    if data is None:
        data = forward_sensitivity(circuit, psi0)
    cpsi = cost_op.apply(data.final)
    if not data.phi.shape[0]:
        return np.zeros(0)
    return 2.0 * (data.phi.conj() @ cpsi).imag


def cost_fragility_exact(
    circuit: Circuit,
    cost_op: HermitianOperator,
    realization,
    psi0: StateVector | None = None,
) -> FragilityReport:
    """``(<C>_noisy - <C>_ideal)^2`` for one noise realization."""
    ideal = _trajectory_arrays(circuit, psi0)[-1]
    noisy = simulate_noisy(circuit, realization, psi0).amplitudes
    ci = float(np.vdot(ideal, cost_op.apply(ideal)).real)
    cn = float(np.vdot(noisy, cost_op.apply(noisy)).real)
    return FragilityReport(
        method="cost_exact",
        value=(cn - ci) ** 2,
        metadata={"ideal_value": ci, "noisy_value": cn},
    )


def cost_fragility_perturbative(
    circuit: Circuit,
    cost_op: HermitianOperator,
    realization,
    psi0: StateVector | None = None,
) -> FragilityReport:
    """Leading-order squared cost shift ``(sum_s w_s delta_s)^2``."""
    delta = _angles_array(circuit, realization)
    w = cost_weights(circuit, cost_op, psi0)
    shift = float(w @ delta)
    return FragilityReport(
        method="cost_perturbative", value=shift * shift, metadata={"shift": -shift}
    )


def cost_fragility_avg(
    circuit: Circuit,
    cost_op: HermitianOperator,
    psi0: StateVector | None = None,
) -> FragilityReport:
    """Noise-averaged squared cost shift ``sum_s sigma_s^2 w_s^2``."""
    w = cost_weights(circuit, cost_op, psi0)
    sigmas = np.array([p.site.sigma for p in circuit.noise_sites()])
    contributions = (sigmas * sigmas) * (w * w)
    return FragilityReport(
        method="cost_avg",
        value=float(np.add.reduce(contributions)) if contributions.size else 0.0,
        contributions=contributions,
        metadata={"weights": [float(x) for x in w]},
    )


def cost_mc_average(
    circuit: Circuit,
    cost_op: HermitianOperator,
    seed: int,
    samples: int,
    psi0: StateVector | None = None,
    workers: int | None = None,
) -> FragilityReport:
    """Monte-Carlo mean of the exact squared cost shift."""
    ideal = _trajectory_arrays(circuit, psi0)[-1]
    ci = float(np.vdot(ideal, cost_op.apply(ideal)).real)
    values = runners.mc_values(
        circuit, seed, samples, kind="cost", cost_op=cost_op, psi0=psi0, workers=workers
    )
    squared = (values - ci) ** 2
    mean, stderr = runners.summarize(squared)
    return FragilityReport(
        method="cost_mc",
        value=mean,
        stderr=stderr,
        metadata={"samples": int(samples), "seed": int(seed), "ideal_value": ci},
    )


def cost_fragility_analog(
    schedule: Schedule,
    noise: AnalogNoise,
    cost_op: HermitianOperator,
    psi0: StateVector | None = None,
    rtol: float = 1e-7,
) -> FragilityReport:
    """``integral gamma(t) (2 Im <Q psi_t|chi_t>)^2 dt`` with chi the
    back-propagated cost vector; adaptive like the state fragility."""
    if schedule.support_size() > 10:
        raise NumericalError("analog cost fragility is limited to 10-qubit support")
    plans = _plan_segments(schedule, noise.gamma.breakpoints)
    start = schedule.start_state(psi0).amplitudes
    q = noise.operator
    prev = None
    for level in range(_MAX_LEVEL + 1):
        m = _BASE_M << level
        forward = []
        psi = start.copy()
        for plan in plans:
            ts, states = _forward_segment(schedule, plan, psi, m, rk4=False)
            psi = states[-1]
            forward.append((plan, ts, states))
        chi = cost_op.apply(psi)
        total = 0.0
        for plan, ts, states in reversed(forward):
            h = (plan.t1 - plan.t0) / m
            chis = np.empty_like(states)
            chis[m] = chi
            for j in range(m - 1, -1, -1):
                if plan.constant_op is not None:
                    chi = plan.constant_op.evolve_vec(chi, -h)
                else:
                    mid_op = schedule.hamiltonian(0.5 * (ts[j] + ts[j + 1]), plan.mid)
                    chi = mid_op.evolve_vec(chi, -h)
                chis[j] = chi
            vals = np.empty(m + 1)
            for j in range(m + 1):
                g = noise.gamma_at(ts[j], plan.mid)
                if g == 0.0:
                    vals[j] = 0.0
                    continue
                if q is not None:
                    qpsi = q.apply(states[j])
                else:
                    qpsi = schedule.apply_at(ts[j], states[j], plan.mid)
                w = 2.0 * np.vdot(qpsi, chis[j]).imag
                vals[j] = g * w * w
            total += _simpson(vals, h)
        if prev is not None and abs(total - prev) <= rtol * max(abs(total), 1e-12):
            return FragilityReport(
                method="cost_analog",
                value=total,
                metadata={"levels": level + 1, "nodes_per_segment": m + 1},
            )
        prev = total
    raise NumericalError(f"analog cost integral did not converge to rtol={rtol}")


def cost_bound_check(
    circuit: Circuit,
    cost_op: HermitianOperator,
    realization,
    psi0: StateVector | None = None,
) -> dict:
    """Verify ``(<C>_noisy - <C>_ideal)^2 <= 4 ||C||^2 * state fragility``.

    Uses the coefficient 1-norm as the (upper-bounding) operator norm, so a
    pass is conservative.  Returns the two sides and a boolean.
    """
    from resil.digital import fragility_exact

    cost = cost_fragility_exact(circuit, cost_op, realization, psi0).value
    frag = fragility_exact(circuit, realization, psi0).value
    bound = 4.0 * cost_op.norm_bound() ** 2 * frag
    return {
        "cost": cost,
        "bound": bound,
        "holds": cost <= bound + 1e-9 * max(bound, 1.0),
    }


def projector_cost_identity(
    circuit: Circuit,
    realization,
    psi0: StateVector | None = None,
) -> dict:
    """For ``C = I - |ideal><ideal|``: the exact squared cost shift equals
    ``(1 + f)^2 (F/2)^2`` with ``f`` the noisy/ideal overlap magnitude and
    ``F`` the state fragility.  Returns both sides and their residual.

    The left side is computed through the generic cost path with C built by
    dense Pauli decomposition, the right side from the exact fragility.
    """
    ideal = _trajectory_arrays(circuit, psi0)[-1]
    n = circuit.n_qubits
    cmat = np.eye(1 << n, dtype=complex) - np.outer(ideal, ideal.conj())
    cost_op = HermitianOperator.from_dense(cmat, tuple(range(n)), n, tol=1e-11)
    lhs = cost_fragility_exact(circuit, cost_op, realization, psi0).value
    from resil.digital import fragility_exact

    report = fragility_exact(circuit, realization, psi0)
    f = report.metadata["overlap"]
    rhs = (1.0 + f) ** 2 * (report.value / 2.0) ** 2
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs)}
