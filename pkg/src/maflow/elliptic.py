"""Damped Newton solver for the stationary equation det(Hess v) = exp(-f(z, v)).

The iteration works on the log form  log det(Hess v) + f(z, v) = 0, whose
linearization at a strictly plurisubharmonic iterate is the elliptic operator
trace(Hess v)^{-1} Hess(w) + f_u w.  A backtracking line search keeps every
iterate inside the admissible cone and enforces sufficient decrease of the
sup-norm residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import solve_banded

from ._stencil import box_linear_solve, core_view
from .catalogue import BoundSource, FieldSpec, SourceTerm
from .grid import DomainSpec, Grid, GridField, build_grid
from .hessian import HermitianField, complex_hessian, hermitian_det, min_eigenvalue


@dataclass(frozen=True)
class StationarySpec:
    """Boundary value problem det(Hess v) = exp(-f(z, v)) with Dirichlet data.

    ``guess`` must evaluate to a strictly plurisubharmonic field matching the
    boundary data; sources need b = 0 (no explicit time dependence).
    """

    domain: DomainSpec
    boundary: FieldSpec
    guess: FieldSpec
    source: SourceTerm = SourceTerm(a=0.0, g=FieldSpec.constant(0.0), b=0.0)
    tol_newton: float = 1e-10
    max_iter: int = 40
    det_floor: float = 1e-12
    tol_bc: float = 1e-8
    linear_resid_tol: float = 1e-10

    def __post_init__(self):
        if self.source.b != 0.0:
            raise ValueError("stationary problems need a time-independent source (b = 0)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class NewtonReport:
    """Outcome of one damped Newton run."""

    v: GridField
    converged: bool
    iterations: int
    sup_residual: float
    det_residual_sup: float
    residual_history: list = dc_field(default_factory=list)
    damping_history: list = dc_field(default_factory=list)


def log_residual(g: Grid, v: GridField, bound: BoundSource) -> GridField:
    """log det(Hess v) + f(z, v) on interior nodes, zero elsewhere."""
    det = hermitian_det(complex_hessian(g, v)).values
    out = np.zeros(g.num_nodes)
    det_int = det[g.interior]
    if det_int.size and np.min(det_int) <= 0.0:
        raise ValueError("residual needs det(Hess v) > 0 on the interior")
    out[g.interior] = np.log(det_int) + bound.f(v.values, 0.0)[g.interior]
    return GridField(g, out)


def det_residual(g: Grid, v: GridField, bound: BoundSource) -> GridField:
    """det(Hess v) - exp(-f(z, v)) on interior nodes, zero elsewhere."""
    det = hermitian_det(complex_hessian(g, v)).values
    out = np.zeros(g.num_nodes)
    out[g.interior] = (det - bound.exp_neg_f(v.values, 0.0))[g.interior]
    return GridField(g, out)


def _radial_linearized(g: Grid, hess: HermitianField, f_u: float,
                       rhs: np.ndarray, resid_tol: float) -> np.ndarray:
    """Tridiagonal solve of trace(Hess v)^{-1} Hess(w) + f_u w = rhs, w(R) = 0."""
    N = g.num_nodes
    n = g.n
    h = g.h
    ni = N - 1
    lam_r = hess.diag[:, -1]
    lam_t = hess.diag[:, 0]
    diag = np.empty(ni)
    upper = np.zeros(ni)
    lower = np.zeros(ni)
    lam0 = lam_r[0]
    diag[0] = -n / (h * h * lam0) + f_u
    upper[0] = n / (h * h * lam0)
    r = g.r[1:ni]
    A = 1.0 / (4.0 * h * h * lam_r[1:ni])
    B = 1.0 / (8.0 * h * r * lam_r[1:ni])
    if n == 2:
        B = B + 1.0 / (4.0 * h * r * lam_t[1:ni])
    diag[1:] = -2.0 * A + f_u
    upper[1:] = A + B
    lower[0:ni - 1] = A - B  # lower[i-1] multiplies w_{i-1} in row i
    ab = np.zeros((3, ni))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[:ni - 1]
    w = solve_banded((1, 1), ab, rhs[:ni])
    check = diag * w
    check[:-1] += upper[:-1] * w[1:]
    check[1:] += lower[:ni - 1] * w[:-1]
    resid = float(np.max(np.abs(check - rhs[:ni]))) if ni else 0.0
    if not np.isfinite(resid) or resid > resid_tol:
        raise RuntimeError(f"linearized solve residual {resid:.3e} exceeds {resid_tol:.1e}")
    out = np.zeros(N)
    out[:ni] = w
    return out


def _box_linearized(g: Grid, hess: HermitianField, f_u: float,
                    rhs: np.ndarray, resid_tol: float) -> np.ndarray:
    """Sparse solve of trace(Hess v)^{-1} Hess(w) + f_u w = rhs, w = 0 on faces."""
    shape = g.node_shape
    if g.n == 1:
        lam = core_view(hess.diag[:, 0].reshape(shape))
        quarter = 0.25 / lam
        second = {0: quarter, 1: quarter}
        cross = {}
    else:
        d1 = core_view(hess.diag[:, 0].reshape(shape))
        d2 = core_view(hess.diag[:, 1].reshape(shape))
        off = core_view(hess.off.reshape(shape))
        det = d1 * d2 - np.abs(off) ** 2
        e11 = d2 / det
        e22 = d1 / det
        e12 = -off / det
        second = {0: 0.25 * e11, 1: 0.25 * e11, 2: 0.25 * e22, 3: 0.25 * e22}
        cross = {
            (0, 2): 0.5 * e12.real, (1, 3): 0.5 * e12.real,
            (0, 3): 0.5 * e12.imag, (1, 2): -0.5 * e12.imag,
        }
    return box_linear_solve(g, second, cross, f_u, rhs,
                            np.zeros(g.num_nodes), spd=False, resid_tol=resid_tol)


def linearized_solve(g: Grid, v: GridField, f_u: float, rhs: GridField,
                     resid_tol: float = 1e-10) -> GridField:
    """Solve trace(Hess v)^{-1} Hess(w) + f_u w = rhs with zero boundary data."""
    hess = complex_hessian(g, v)
    eig = min_eigenvalue(hess).values[g.interior]
    if eig.size and np.min(eig) <= 0.0:
        raise ValueError("linearization needs a strictly plurisubharmonic base point")
    if g.kind == "radial":
        out = _radial_linearized(g, hess, f_u, rhs.values, resid_tol)
    else:
        out = _box_linearized(g, hess, f_u, rhs.values, resid_tol)
    return GridField(g, out)


def _admissible_sup(g, v, bound, det_floor):
    """(sup residual, ok) for a trial iterate; ok=False when outside the cone."""
    hess = complex_hessian(g, v)
    eig = min_eigenvalue(hess).values[g.interior]
    det = hermitian_det(hess).values[g.interior]
    if det.size and (np.min(eig) <= 0.0 or np.min(det) < det_floor):
        return math.inf, False
    resid = np.log(det) + bound.f(v.values, 0.0)[g.interior]
    sup = float(np.max(np.abs(resid))) if resid.size else 0.0
    return sup, True


def newton_solve(spec: StationarySpec, g: Grid | None = None,
                 verbose: bool = False) -> NewtonReport:
    """Run the damped Newton iteration from the supplied guess.

    Backtracking halves the step until the iterate stays strictly
    plurisubharmonic and the sup-norm of the log-form residual satisfies the
    sufficient decrease bound (1 - s/2) * previous.
    """
    g = g or build_grid(spec.domain)
    bound = spec.source.bind(g)
    v_vals = spec.guess.evaluate(g).values.copy()
    phi = spec.boundary.evaluate(g)
    gap = float(np.max(np.abs(v_vals[g.boundary] - phi.values[g.boundary])))
    if gap > spec.tol_bc:
        raise ValueError(f"guess misses the boundary data by {gap:.3e}")
    v_vals[g.boundary] = phi.values[g.boundary]
    v = GridField(g, v_vals)
    sup, ok = _admissible_sup(g, v, bound, spec.det_floor)
    if not ok:
        raise ValueError("guess is not strictly plurisubharmonic on the interior")

    history = []
    damping = []
    iterations = 0
    converged = sup <= spec.tol_newton
    while not converged and iterations < spec.max_iter:
        resid = log_residual(g, v, bound)
        w = linearized_solve(g, v, bound.f_u, GridField(g, -resid.values),
                             resid_tol=spec.linear_resid_tol)
        s = 1.0
        while True:
            trial = GridField(g, v.values + s * w.values)
            sup_trial, ok = _admissible_sup(g, trial, bound, spec.det_floor)
            if ok and sup_trial <= (1.0 - 0.5 * s) * sup:
                break
            s *= 0.5
            if s < 1e-8:
                raise RuntimeError(
                    f"line search stalled at iteration {iterations} "
                    f"(residual {sup:.3e})"
                )
        v = trial
        sup = sup_trial
        iterations += 1
        det_sup = float(np.max(np.abs(det_residual(g, v, bound).values)))
        history.append(det_sup)
        damping.append(s)
        if verbose:
            print(f"  newton[{iterations}] s={s:g} sup_log={sup:.3e} sup_det={det_sup:.3e}")
        converged = sup <= spec.tol_newton
    det_sup = float(np.max(np.abs(det_residual(g, v, bound).values)))
    return NewtonReport(v=v, converged=converged, iterations=iterations,
                        sup_residual=sup, det_residual_sup=det_sup,
                        residual_history=history, damping_history=damping)
