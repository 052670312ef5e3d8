"""2D periodic fluid-kinetic drag-coupling simulator and diagnostics lab."""

from .config import PRESETS, ConfigError, SimConfig, load_config
from .diagnostics import (
    DiagnosticsRow,
    FitResult,
    ProfileAccumulator,
    balance_residuals,
    dissipation,
    entropy,
    fit_decay,
    kinetic_energy,
    lambda0_scale,
    modulated_energy,
    u_infinity,
    u_infinity_inhomogeneous,
    w1_upper_bound,
)
from .fluid import FluidState, cfl_dt, material_derivative, ns_rhs, recover_pressure, step_homogeneous
from .particles import (
    InitialDistribution,
    MomentFields,
    ParticleEnsemble,
    VelocityHistory,
    deposit_moments,
    flow_jacobian_probe,
    gather_velocity,
    push,
    sample_initial,
)
from .density import advect_density, step_inhomogeneous, varcoef_poisson_solve
from .oracle import PhaseSpaceGrid, compare_moments, grid_moments, sl_vlasov_step
from .run import NumericalError, RunResult, Runner, compare_oracle, run_config
from .spectral import (
    ScalarField,
    TorusGrid,
    VectorField,
    divergence,
    gradient,
    invert_laplacian,
    laplacian,
    leray_project,
    phase_shift,
    sobolev_norm,
    sup_norm,
    transform_forward,
    transform_inverse,
)

__version__ = "0.1.0"
