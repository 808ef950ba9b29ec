"""Damped beam with an obstacle at the free end: simulation and diagnostics."""

from .model import (
    BeamParams,
    ContactLaw,
    ForceLaw,
    MultiplierSpec,
    NoContact,
    NormalCompliance,
    SignoriniPenalty,
    TipParams,
    body_force,
    body_force_primitive,
    contact_potential,
    contact_traction,
    default_multiplier,
    is_stabilizing_xi,
    multiplier_q,
    multiplier_q0,
)
from .discretize import Mesh, SemiDiscreteSystem, assemble, build_mesh, recover_stress
from .timestep import (
    Laws,
    NewtonDivergence,
    SchemeConfig,
    State,
    Trajectory,
    energy_balance_residual,
    initial_state,
    simulate,
    state_norm,
    step,
    total_energy,
)
from .diagnostics import (
    AbsorbingReport,
    ComplementarityReport,
    DecayFit,
    EnergyReport,
    ObservabilityReport,
    absorbing_probe,
    complementarity_report,
    constraint_violation,
    energy,
    energy_series,
    fit_decay,
    observability,
)
from .spectral import (
    GeneratorPencil,
    SpectralReport,
    XiStudyRow,
    generator,
    spectrum,
    trend_toward_zero,
    xi_study,
)
from .config import ConfigError, ExperimentConfig, load_config

__version__ = "0.1.0"
