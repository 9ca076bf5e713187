"""1D power-law thin-film equation: implicit variational stepping with a
singular barrier potential, energy-dissipation auditing, and desk-scale
experiments (lift-off, dissipation scalings, degenerate transport action).
"""

from .driver import (
    AuditReport,
    ContinuationReport,
    EnergyAuditError,
    InitialDataSpec,
    RunConfig,
    StepDiagnostics,
    TimeSeries,
    audit_ede,
    holder_quotient,
    parabola_profile,
    run,
    run_many,
    sigma_continuation,
)
from .grid import Grid, divergence, gradient, integrate, laplacian_neumann, zero_flux
from .models import (
    INFINITE_ENERGY,
    EnergyBreakdown,
    MobilitySpec,
    ModelParams,
    ModifiedPotential,
    PotentialSpec,
    build_modified_potential,
    constant_mobility,
    energy,
    mobility_face,
    navier_slip_mobility,
    power_mobility,
    psi,
    psi_inverse,
    quadratic_potential,
    strong_singular_potential,
    unmodified_potential,
    zero_potential,
)
from .step import (
    StepNonconvergenceError,
    StepParams,
    StepResult,
    el_residual,
    reduced_objective,
    solve_step,
)

__version__ = "0.1.0"
