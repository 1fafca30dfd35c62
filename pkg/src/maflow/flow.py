"""Explicit parabolic solver for  du/dt = log det(Hess u) + f(t, z, u).

Boundary values are held fixed, the step size follows the CFL-type rule
dt = sigma * (h^2/4) / max trace(Hess u)^{-1}, and each accepted step must
keep the field strictly plurisubharmonic.  The driver records a trace of
functional values against the initial field and stops on one of: steady
state (sup |du/dt| below tolerance), the time horizon, or the step budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from . import _radial_kernels as _rk
from ._stencil import core_view
from .catalogue import BoundSource, FieldSpec, SourceTerm, ZERO_SOURCE
from .functionals import (
    DEFAULT_PATH_NODES,
    FunctionalReport,
    InvariantViolation,
    evaluate_report,
)
from .grid import (
    DomainSpec,
    Grid,
    GridField,
    build_grid,
    lift_boundary_data,
    quadrature_tolerance,
)
from .hessian import (
    complex_hessian,
    harmonic_extension,
    hermitian_det,
    min_eigenvalue,
    trace_of_inverse,
)

CFL_HARD_LIMIT = 8.0


class StabilityError(RuntimeError):
    """The evolving field left the admissible cone or the budget ran out."""


@dataclass(frozen=True)
class ProblemSpec:
    """Full description of one initial-boundary value problem.

    ``boundary`` is evaluated on the whole grid and read on boundary nodes,
    ``subsolution`` doubles as the default initial field, and ``horizon=None``
    means run until steady.  ``steady_tol=None`` resolves to 1e-9 on radial
    grids and 1e-6 on box grids; ``tol_drift`` (monotonicity slack for F)
    resolves to 10x the quadrature tolerance.
    """

    domain: DomainSpec
    boundary: FieldSpec
    subsolution: FieldSpec
    source: SourceTerm = ZERO_SOURCE
    initial: FieldSpec | None = None
    reference: FieldSpec | None = None
    horizon: float | None = None
    cfl_safety: float = 0.4
    path_nodes: int = DEFAULT_PATH_NODES
    det_floor: float = 1e-12
    steady_tol: float | None = None
    tol_bc: float = 1e-8
    tol_psh: float = 1e-8
    tol_compat: float = 1e-8
    tol_drift: float | None = None
    max_steps: int = 50_000_000
    require_subsolution: bool = True

    def __post_init__(self):
        if not 0.0 < self.cfl_safety < CFL_HARD_LIMIT:
            raise ValueError(f"cfl_safety must lie in (0, {CFL_HARD_LIMIT})")
        if self.horizon is not None and self.horizon <= 0.0:
            raise ValueError("horizon must be positive")
        if self.det_floor <= 0.0:
            raise ValueError("det_floor must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")

    def resolved_steady_tol(self) -> float:
        if self.steady_tol is not None:
            return self.steady_tol
        return 1e-9 if self.domain.kind == "radial" else 1e-6


@dataclass
class FlowState:
    """One accepted time slice, with the cached quantities a step needs."""

    grid: Grid
    t: float
    u: GridField
    udot: GridField
    steps: int
    last_dt: float
    det_min: float
    det_max: float
    trace_inverse_max: float

    @property
    def sup_udot(self) -> float:
        return float(np.max(np.abs(self.udot.values)))


@dataclass(frozen=True)
class TraceRow:
    """One line of the flow trace; attribute names match the trace columns."""

    t: float
    F: float
    F0: float
    I: float
    J: float
    Y: float
    det_min: float
    det_max: float
    sup_udot: float
    sup_grad: float
    sup_hess: float
    sup_err_vs_ref: float | None


@dataclass(frozen=True)
class CompatibilityReport:
    """First-order corner compatibility of the initial and boundary data.

    ``r0`` holds the residual (boundary time derivative minus the right hand
    side at t=0) sampled on interior nodes adjacent to the boundary; ``r1``
    is the time derivative of that residual, which for this source catalogue
    is the constant -b.
    """

    r0: np.ndarray
    node_indices: np.ndarray
    max_abs_r0: float
    r1: float
    satisfied: bool


@dataclass(frozen=True)
class SubsolutionReport:
    """Discrete admissibility of the candidate subsolution.

    ``interior_residual`` is the largest value of
    d(usub)/dt - log det(Hess usub) - f over interior nodes (zero time
    derivative here); admissibility needs it to be <= 0 up to tolerance.
    """

    psh_ok: bool
    min_interior_eig: float
    interior_residual: float
    boundary_gap: float
    initial_gap: float
    passed: bool


@dataclass(frozen=True)
class MonitorReport:
    """A priori bounds checked against the current slice.

    ``m0`` is the measured sup |u|; ``barrier`` is the cap implied by the
    subsolution and the harmonic majorant; ordering defects are clipped at
    zero so that positive values mean a violated inequality.
    """

    m0: float
    barrier: float
    sub_defect: float
    majorant_defect: float
    c0: float
    c1: float
    trace_inverse_min: float
    trace_lower_bound: float
    trace_ok: bool
    sup_grad: float
    sup_hess: float
    within_bounds: bool


@dataclass
class FlowResult:
    """Everything a run produced: final state, trace, and diagnostics."""

    grid: Grid
    problem: ProblemSpec
    state: FlowState
    rows: list
    reason: str
    compatibility: CompatibilityReport
    subsolution_report: SubsolutionReport
    base: GridField
    subsolution: GridField
    harmonic_majorant: GridField
    monitors: MonitorReport
    reference: GridField | None = None
    reports: list = dc_field(default_factory=list)


def sup_gradient(g: Grid, u: GridField) -> float:
    """Sup over interior nodes of the Euclidean gradient (central differences)."""
    vals = u.values
    if g.kind == "radial":
        if g.num_nodes < 3:
            return 0.0
        d1 = (vals[2:] - vals[:-2]) / (2.0 * g.h)
        return float(np.max(np.abs(d1))) if d1.size else 0.0
    arr = g.reshape(vals)
    sq = None
    for a in range(2 * g.n):
        plus = np.zeros(2 * g.n, dtype=int)
        plus[a] = 1
        d = (core_view(arr, tuple(plus)) - core_view(arr, tuple(-plus))) / (2.0 * g.spacings[a])
        sq = d * d if sq is None else sq + d * d
    return float(np.sqrt(np.max(sq)))


def sup_second_derivative(g: Grid, u: GridField) -> float:
    """Sup over interior nodes of all real second-order central stencils."""
    vals = u.values
    if g.kind == "radial":
        h2 = g.h * g.h
        d2 = (vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / h2
        slope = (vals[2:] - vals[:-2]) / (2.0 * g.h) / g.r[1:-1]
        origin = 2.0 * (vals[1] - vals[0]) / h2
        return float(max(np.max(np.abs(d2)), np.max(np.abs(slope)), abs(origin)))
    arr = g.reshape(vals)
    worst = 0.0
    naxes = 2 * g.n
    for a in range(naxes):
        ha = g.spacings[a]
        plus = np.zeros(naxes, dtype=int)
        plus[a] = 1
        center = core_view(arr, tuple(np.zeros(naxes, dtype=int)))
        d2 = (core_view(arr, tuple(plus)) - 2.0 * center
              + core_view(arr, tuple(-plus))) / (ha * ha)
        worst = max(worst, float(np.max(np.abs(d2))))
    for a in range(naxes):
        for b in range(a + 1, naxes):
            off = np.zeros(naxes, dtype=int)
            off[a] = 1
            off[b] = 1
            pp = core_view(arr, tuple(off))
            mm = core_view(arr, tuple(-off))
            off[b] = -1
            pm = core_view(arr, tuple(off))
            mp = core_view(arr, tuple(-off))
            cross = (pp + mm - pm - mp) / (4.0 * g.spacings[a] * g.spacings[b])
            worst = max(worst, float(np.max(np.abs(cross))))
    return worst


def _boundary_adjacent_interior(g: Grid) -> np.ndarray:
    """Flat indices of interior nodes whose stencil touches the boundary."""
    if g.kind == "radial":
        return np.array([g.num_nodes - 2], dtype=int)
    shape = g.node_shape
    adj = np.zeros(shape, dtype=bool)
    for a, size in enumerate(shape):
        sl = [slice(None)] * len(shape)
        sl[a] = 1
        adj[tuple(sl)] = True
        sl[a] = size - 2
        adj[tuple(sl)] = True
    adj &= g.reshape(g.interior.astype(float)) > 0.5
    return np.flatnonzero(adj.ravel())


def _make_state(g: Grid, bound: BoundSource, u_values: np.ndarray, t: float,
                steps: int, last_dt: float, det_floor: float) -> FlowState:
    """Validate a slice and cache dets, trace inverse, and the time derivative."""
    u = GridField(g, u_values)
    hess = complex_hessian(g, u)
    eig = min_eigenvalue(hess).values[g.interior]
    det = hermitian_det(hess).values[g.interior]
    if eig.size and (np.min(eig) <= 0.0 or np.min(det) < det_floor):
        raise StabilityError(
            f"field left the admissible cone at t={t:.6g} (step {steps}): "
            f"min eig {np.min(eig):.3e}, min det {np.min(det):.3e}"
        )
    udot_vals = np.zeros(g.num_nodes)
    udot_vals[g.interior] = np.log(det) + bound.f(u_values, t)[g.interior]
    trinv = trace_of_inverse(hess).values[g.interior]
    return FlowState(
        grid=g, t=t, u=u, udot=GridField(g, udot_vals), steps=steps, last_dt=last_dt,
        det_min=float(np.min(det)) if det.size else math.nan,
        det_max=float(np.max(det)) if det.size else math.nan,
        trace_inverse_max=float(np.max(trinv)) if trinv.size else math.nan,
    )


def initial_state(p: ProblemSpec, g: Grid | None = None) -> FlowState:
    g = g or build_grid(p.domain)
    bound = p.source.bind(g)
    u0 = (p.initial or p.subsolution).evaluate(g)
    phi = p.boundary.evaluate(g)
    gap = float(np.max(np.abs(u0.values[g.boundary] - phi.values[g.boundary])))
    if gap > p.tol_bc:
        raise ValueError(f"initial field misses the boundary data by {gap:.3e}")
    vals = u0.values.copy()
    vals[g.boundary] = phi.values[g.boundary]
    return _make_state(g, bound, vals, 0.0, 0, 0.0, p.det_floor)


def step(p: ProblemSpec, state: FlowState, bound: BoundSource | None = None) -> FlowState:
    """One explicit Euler step with the adaptive step size."""
    g = state.grid
    bound = bound or p.source.bind(g)
    dt = p.cfl_safety * g.h * g.h * 0.25 / state.trace_inverse_max
    if p.horizon is not None and state.t + dt > p.horizon:
        dt = p.horizon - state.t
        if dt <= 0.0:
            return state
    u_new = state.u.values.copy()
    u_new[g.interior] += dt * state.udot.values[g.interior]
    return _make_state(g, bound, u_new, state.t + dt, state.steps + 1, dt, p.det_floor)


def check_compatibility(p: ProblemSpec, g: Grid | None = None) -> CompatibilityReport:
    """Residual of the order-0/1 corner conditions near the boundary at t=0."""
    g = g or build_grid(p.domain)
    bound = p.source.bind(g)
    u0 = (p.initial or p.subsolution).evaluate(g)
    hess = complex_hessian(g, u0)
    det = hermitian_det(hess).values
    idx = _boundary_adjacent_interior(g)
    if np.min(det[idx]) <= 0.0:
        raise ValueError("initial field is not strictly plurisubharmonic near the boundary")
    r0 = -(np.log(det[idx]) + bound.f(u0.values, 0.0)[idx])
    r1 = -bound.b
    max_r0 = float(np.max(np.abs(r0))) if r0.size else 0.0
    ok = max_r0 <= p.tol_compat and abs(r1) <= p.tol_compat
    return CompatibilityReport(r0=r0, node_indices=idx, max_abs_r0=max_r0, r1=r1, satisfied=ok)


def check_subsolution(p: ProblemSpec, g: Grid | None = None) -> SubsolutionReport:
    """Discrete check that the candidate lies under the data and relaxes upward.

    Interior: log det(Hess usub) + f(0, z, usub) >= 0 up to tol_compat (so the
    flow started there moves up).  Boundary: usub <= boundary data up to
    tol_bc.  If a separate initial field is given, usub must sit below it.
    """
    g = g or build_grid(p.domain)
    bound = p.source.bind(g)
    usub = p.subsolution.evaluate(g)
    phi = p.boundary.evaluate(g)
    u0 = (p.initial or p.subsolution).evaluate(g)
    hess = complex_hessian(g, usub)
    eig = min_eigenvalue(hess).values[g.interior]
    min_eig = float(np.min(eig)) if eig.size else math.inf
    psh_ok = min_eig > 0.0
    if psh_ok:
        det = hermitian_det(hess).values[g.interior]
        resid = -(np.log(det) + bound.f(usub.values, 0.0)[g.interior])
        residual = float(np.max(resid)) if resid.size else 0.0
    else:
        residual = math.inf
    boundary_gap = float(np.max(usub.values[g.boundary] - phi.values[g.boundary]))
    initial_gap = float(np.max(usub.values - u0.values))
    passed = (psh_ok and residual <= p.tol_compat
              and boundary_gap <= p.tol_bc and initial_gap <= p.tol_bc)
    return SubsolutionReport(psh_ok=psh_ok, min_interior_eig=min_eig,
                             interior_residual=residual, boundary_gap=boundary_gap,
                             initial_gap=initial_gap, passed=passed)


def monitor_bounds(p: ProblemSpec, state: FlowState, usub: GridField,
                   majorant: GridField, tol: float = 1e-9) -> MonitorReport:
    """Check the barrier bounds usub <= u <= harmonic majorant and the
    pointwise trace inequality trace(Hess u)^{-1} >= n * det_max^{-1/n}."""
    g = state.grid
    barrier = float(max(np.max(np.abs(usub.values)), np.max(np.abs(majorant.values))))
    m0 = float(np.max(np.abs(state.u.values)))
    sub_defect = max(float(np.max(usub.values - state.u.values)), 0.0)
    maj_defect = max(float(np.max(state.u.values - majorant.values)), 0.0)
    hess = complex_hessian(g, state.u)
    trinv = trace_of_inverse(hess).values[g.interior]
    tr_min = float(np.min(trinv)) if trinv.size else math.inf
    lower = g.n * state.det_max ** (-1.0 / g.n)
    trace_ok = tr_min >= lower * (1.0 - 1e-12)
    scale = max(barrier, 1.0)
    ok = (sub_defect <= tol * scale and maj_defect <= tol * scale
          and trace_ok and m0 <= barrier + tol * scale)
    return MonitorReport(
        m0=m0, barrier=barrier, sub_defect=sub_defect, majorant_defect=maj_defect,
        c0=state.det_min, c1=state.det_max, trace_inverse_min=tr_min,
        trace_lower_bound=lower, trace_ok=trace_ok,
        sup_grad=sup_gradient(g, state.u), sup_hess=sup_second_derivative(g, state.u),
        within_bounds=ok,
    )


def _emit_row(p: ProblemSpec, g: Grid, state: FlowState, base: GridField,
              bound: BoundSource, ref: GridField | None, tol_q: float) -> tuple:
    report = evaluate_report(g, state.u, base, bound, m=p.path_nodes,
                             udot=state.udot, base_point="u0",
                             tol_psh=p.tol_psh, tol_bc=p.tol_bc).check(tol_q)
    err = None
    if ref is not None:
        err = float(np.max(np.abs(state.u.values - ref.values)))
    row = TraceRow(
        t=state.t, F=report.F, F0=report.F0, I=report.I, J=report.J, Y=report.Y,
        det_min=state.det_min, det_max=state.det_max, sup_udot=state.sup_udot,
        sup_grad=sup_gradient(g, state.u), sup_hess=sup_second_derivative(g, state.u),
        sup_err_vs_ref=err,
    )
    return row, report


def _advance_python(p, g, bound, state, chunk, steady_tol):
    """Step up to ``chunk`` times; returns (state, reason or None)."""
    for _ in range(chunk):
        if state.sup_udot <= steady_tol:
            return state, "steady"
        if p.horizon is not None and state.t >= p.horizon * (1.0 - 1e-15):
            return state, "horizon"
        if state.steps >= p.max_steps:
            return state, "max_steps"
        state = step(p, state, bound)
    return state, None


def _advance_kernel(p, g, bound, state, chunk, steady_tol):
    """Chunked compiled advance; the caller re-checks steadiness in numpy."""
    u = state.u.values.copy()
    t_end = math.inf if p.horizon is None else p.horizon
    budget = min(chunk, p.max_steps - state.steps)
    t, done, status, _sup, last_dt = _rk.advance(
        u, g.r, g.h, g.n, bound.a, bound.g_values, bound.b, state.t,
        p.cfl_safety, p.det_floor, steady_tol, t_end, budget,
    )
    if status == _rk.STATUS_FAIL:
        raise StabilityError(
            f"field left the admissible cone at t={t:.6g} (step {state.steps + done})"
        )
    new = _make_state(g, bound, u, t, state.steps + done, last_dt or state.last_dt,
                      p.det_floor)
    if status == _rk.STATUS_STEADY and new.sup_udot <= steady_tol:
        return new, "steady", done
    if status == _rk.STATUS_HORIZON:
        return new, "horizon", done
    if new.steps >= p.max_steps:
        return new, "max_steps", done
    return new, None, done


def run_flow(p: ProblemSpec, snapshot_every: int | None = None,
             snapshot_writer=None, use_kernel: bool = True,
             collect_reports: bool = False) -> FlowResult:
    """Evolve the problem to steadiness or the horizon, tracing functionals.

    A trace row is evaluated against the frozen initial field every
    ``snapshot_every`` steps; F must be non-increasing along the run up to
    the drift tolerance, otherwise the run aborts with InvariantViolation.
    """
    if p.source.b != 0.0:
        raise ValueError("functional tracing requires a time-independent source (b = 0)")
    g = build_grid(p.domain)
    bound = p.source.bind(g)
    sub_report = check_subsolution(p, g)
    if p.require_subsolution and not sub_report.passed:
        raise ValueError(
            "subsolution check failed: "
            f"psh_ok={sub_report.psh_ok} residual={sub_report.interior_residual:.3e} "
            f"boundary_gap={sub_report.boundary_gap:.3e} "
            f"initial_gap={sub_report.initial_gap:.3e}"
        )
    compat = check_compatibility(p, g)
    state = initial_state(p, g)
    base = state.u.copy()
    usub = p.subsolution.evaluate(g)
    phi = p.boundary.evaluate(g)
    majorant = harmonic_extension(g, phi.values)
    ref = p.reference.evaluate(g) if p.reference is not None else None
    steady_tol = p.resolved_steady_tol()
    tol_q = quadrature_tolerance(g, base, usub)
    tol_drift = p.tol_drift if p.tol_drift is not None else 10.0 * tol_q
    if snapshot_every is None:
        snapshot_every = 2000 if g.kind == "radial" else 25
    kernel_ok = use_kernel and g.kind == "radial" and _rk.HAVE_NUMBA

    rows = []
    reports = []
    row, report = _emit_row(p, g, state, base, bound, ref, tol_q)
    rows.append(row)
    if collect_reports:
        reports.append(report)
    if snapshot_writer is not None:
        snapshot_writer(state)
    f_prev = row.F
    reason = None
    if state.sup_udot <= steady_tol:
        reason = "steady"
    while reason is None:
        if kernel_ok:
            state, reason, done = _advance_kernel(p, g, bound, state, snapshot_every, steady_tol)
            if reason is None and done == 0:
                # compiled steadiness disagreed with the recomputation; nudge
                state = step(p, state, bound)
        else:
            state, reason = _advance_python(p, g, bound, state, snapshot_every, steady_tol)
        row, report = _emit_row(p, g, state, base, bound, ref, tol_q)
        rows.append(row)
        if collect_reports:
            reports.append(report)
        if snapshot_writer is not None:
            snapshot_writer(state)
        if row.F > f_prev + tol_drift:
            raise InvariantViolation(
                f"F increased along the flow: {f_prev:.12e} -> {row.F:.12e} "
                f"(slack {tol_drift:.1e})"
            )
        f_prev = row.F
        if reason is None and state.sup_udot <= steady_tol:
            reason = "steady"
    if reason == "max_steps":
        raise StabilityError(
            f"step budget {p.max_steps} exhausted at t={state.t:.6g} "
            f"with sup |du/dt| = {state.sup_udot:.3e}"
        )
    monitors = monitor_bounds(p, state, usub, majorant)
    return FlowResult(
        grid=g, problem=p, state=state, rows=rows, reason=reason,
        compatibility=compat, subsolution_report=sub_report, base=base,
        subsolution=usub, harmonic_majorant=majorant, monitors=monitors,
        reference=ref, reports=reports,
    )
