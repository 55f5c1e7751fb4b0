"""P1 finite elements and leapfrog integration for damped Timoshenko beams."""

from timobeam.damping import DampingKind, DampingModel, MassPairing, Materials, g_exp_flat, g_odd
from timobeam.decay import DecayClassification, DecayFit, DecayFitError, classify_decay, fit_line
from timobeam.energy import (
    EnergySample,
    EnergyTrace,
    Level,
    chain_energy,
    energy_paper,
    energy_physical,
    identity_residual,
    predicted_rate,
)
from timobeam.fem import (
    Mesh,
    SystemMatrices,
    TriDiag,
    assemble_coupling,
    assemble_mass,
    assemble_stiffness,
    lump_mass,
    quadrature_oracle,
)
from timobeam.linalg import SingularPivotError, thomas_solve
from timobeam.stepper import (
    BeamState,
    ConfigError,
    NonFiniteStateError,
    RunConfig,
    initial_conditions,
    integrate,
    leapfrog_step,
    observed_order,
    reference_solution,
    run_simulation,
    stability_number,
    startup_step,
)

__all__ = [
    "BeamState",
    "ConfigError",
    "DampingKind",
    "DampingModel",
    "DecayClassification",
    "DecayFit",
    "DecayFitError",
    "EnergySample",
    "EnergyTrace",
    "Level",
    "MassPairing",
    "Materials",
    "Mesh",
    "NonFiniteStateError",
    "RunConfig",
    "SingularPivotError",
    "SystemMatrices",
    "TriDiag",
    "assemble_coupling",
    "assemble_mass",
    "assemble_stiffness",
    "chain_energy",
    "classify_decay",
    "energy_paper",
    "energy_physical",
    "fit_line",
    "g_exp_flat",
    "g_odd",
    "identity_residual",
    "initial_conditions",
    "integrate",
    "leapfrog_step",
    "lump_mass",
    "observed_order",
    "predicted_rate",
    "quadrature_oracle",
    "reference_solution",
    "run_simulation",
    "stability_number",
    "startup_step",
    "thomas_solve",
]
