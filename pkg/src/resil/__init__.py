"""resil: noise resilience of digital circuits and analog schedules.

Quantifies how fragile a quantum-algorithm compilation is to coherent
control noise: exact and perturbative fragility of noisy circuits,
noise-averaged fragility from state trajectories, analog (continuous-time)
fragility and stochastic-trajectory Monte Carlo, path-length geometry with
resilience-runtime tradeoff checks, and cost-function sensitivity.

The compute kernels run on a compiled Cython backend when available, with
an equivalent pure-NumPy fallback (see ``resil.backend``; override with
``RESIL_BACKEND=numpy|cython``).
"""

from resil.analog import (
    AnalogNoise,
    Ramp,
    Schedule,
    evolve_schedule,
    fragility_analog,
    propagate,
    trajectory_mc,
)
from resil.circuit import (
    AngleDistribution,
    Circuit,
    Gate,
    Layer,
    NoiseSite,
    simulate_noisy,
    simulate_trajectory,
)
from resil.core import (
    DensityMatrix,
    HermitianOperator,
    InputError,
    NumericalError,
    ResilError,
    SchemaError,
    StateVector,
    apply_gate,
    covariance,
    expectation,
    variance,
)
from resil.cost import (
    cost_bound_check,
    cost_fragility_analog,
    cost_fragility_avg,
    cost_fragility_exact,
    cost_fragility_perturbative,
    cost_mc_average,
    cost_weights,
    projector_cost_identity,
)
from resil.digital import (
    FragilityReport,
    forward_sensitivity,
    fragility_avg,
    fragility_exact,
    fragility_mc,
    fragility_perturbative,
    noise_gram,
    overlap_incoherent,
)
from resil.geometry import (
    TradeoffVerdict,
    check_tradeoff_analog,
    check_tradeoff_cost,
    check_tradeoff_digital,
    path_length_continuous,
    path_length_digital,
)
from resil.models import MODELS, PSpinModel, build_model
from resil.noise import (
    BiasedNoiseSpec,
    attach_biased_noise,
    attach_overrotation_noise,
    coherent_channel_average,
    sample_angles,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "ResilError", "InputError", "SchemaError", "NumericalError",
    # states and operators
    "StateVector", "DensityMatrix", "HermitianOperator",
    "apply_gate", "expectation", "variance", "covariance",
    # circuits
    "Gate", "Layer", "NoiseSite", "Circuit", "AngleDistribution",
    "simulate_trajectory", "simulate_noisy",
    # noise models
    "BiasedNoiseSpec", "attach_biased_noise", "attach_overrotation_noise",
    "coherent_channel_average", "sample_angles",
    # digital fragility
    "FragilityReport", "forward_sensitivity", "noise_gram",
    "fragility_exact", "fragility_perturbative", "fragility_avg",
    "overlap_incoherent", "fragility_mc",
    # analog schedules
    "Ramp", "Schedule", "AnalogNoise", "propagate", "evolve_schedule",
    "fragility_analog", "trajectory_mc",
    # geometry and tradeoffs
    "path_length_digital", "path_length_continuous",
    "TradeoffVerdict", "check_tradeoff_digital", "check_tradeoff_analog",
    "check_tradeoff_cost",
    # cost functions
    "cost_weights", "cost_fragility_exact", "cost_fragility_perturbative",
    "cost_fragility_avg", "cost_mc_average", "cost_fragility_analog",
    "cost_bound_check", "projector_cost_identity",
    # model zoo
    "MODELS", "PSpinModel", "build_model",
]
