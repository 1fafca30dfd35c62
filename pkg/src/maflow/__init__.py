"""Energy functionals and explicit flows for the complex Monge-Ampere operator.

The package evolves strictly plurisubharmonic fields under
du/dt = log det(Hess u) + f(t, z, u) on disc/ball and box domains, solves the
stationary equation by damped Newton, and tracks the energy functionals that
are monotone along the flow.
"""

from .catalogue import FieldSpec, SourceTerm, ZERO_SOURCE
from .elliptic import NewtonReport, StationarySpec, newton_solve
from .flow import (
    FlowResult,
    FlowState,
    ProblemSpec,
    StabilityError,
    TraceRow,
    check_compatibility,
    check_subsolution,
    monitor_bounds,
    run_flow,
    step,
)
from .functionals import (
    FunctionalReport,
    InvariantViolation,
    base_energy,
    dissipation_Y,
    energy_F,
    energy_F0,
    energy_I,
    energy_J,
    evaluate_report,
)
from .grid import (
    DomainSpec,
    Grid,
    GridField,
    GridMismatchError,
    build_grid,
    integrate,
    lift_boundary_data,
    quadrature_tolerance,
)
from .hessian import (
    HermitianField,
    complex_hessian,
    harmonic_extension,
    hermitian_det,
    min_eigenvalue,
    trace_of_inverse,
)
from .snapshots import read_snapshot, read_trace, write_snapshot, write_trace

__version__ = "0.1.0"
