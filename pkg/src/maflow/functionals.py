"""Energy functionals for plurisubharmonic fields with a common boundary trace.

All volume forms (i d d-bar u)^n are realized as det(Hess u) dV with the
discrete complex Hessian.  With w = u - v vanishing on the boundary:

    I(u; v)  = - int w (det Hu - det Hv) dV
    J(u; v)  = - int_0^1 int path_dot (det H(path_t) - det Hv) dV dt
    F0(u; v) = J(u; v) - int u det Hv dV
    F(u)     = F0(u; v) + int G(z, u) dV,   G(z, s) = int_0^s exp(-f(z, tau)) d tau
    Y(u)     = int udot^2 det Hu dV

J is evaluated along the straight path from v to u by default; waypoints give
piecewise-linear paths for path-independence checks.  The Hessian is linear in
the field, so path Hessians are blends of the endpoint Hessians.

Expected identities: I >= J >= 0 up to quadrature error, F0 is convex along
line segments, and F0 satisfies the cocycle relation
F0(u2; u1) + F0(u3; u2) = F0(u3; u1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalogue import BoundSource, SourceTerm
from .grid import Grid, GridField, ensure_same_grid, integrate
from .hessian import HermitianField, complex_hessian, hermitian_det, min_eigenvalue

DEFAULT_PATH_NODES = 9
DEFAULT_TOL_PSH = 1e-8
DEFAULT_TOL_BC = 1e-8


class InvariantViolation(RuntimeError):
    """A structural inequality that should hold numerically was violated."""


def _simpson_unit(m):
    from .grid import _simpson_coefficients

    if m < 3:
        raise ValueError(f"path quadrature needs at least 3 nodes, got {m}")
    return np.linspace(0.0, 1.0, m), _simpson_coefficients(m, 1.0 / (m - 1))


def _blend(ha: HermitianField, hb: HermitianField, t: float) -> HermitianField:
    diag = (1.0 - t) * ha.diag + t * hb.diag
    off = None
    if ha.off is not None:
        off = (1.0 - t) * ha.off + t * hb.off
    return HermitianField(ha.grid, diag, off)


def _validate_family(g, fields, hessians, tol_psh, tol_bc):
    base = fields[0].values[g.boundary]
    for f, h in zip(fields, hessians):
        gap = float(np.max(np.abs(f.values[g.boundary] - base))) if base.size else 0.0
        if gap > tol_bc:
            raise ValueError(f"boundary trace mismatch {gap:.3e} exceeds {tol_bc:.1e}")
        lam = float(np.min(min_eigenvalue(h).values[g.interior]))
        if lam < -tol_psh:
            raise ValueError(f"field is not plurisubharmonic (min eigenvalue {lam:.3e})")


def energy_I(g: Grid, u: GridField, v: GridField,
             tol_psh=DEFAULT_TOL_PSH, tol_bc=DEFAULT_TOL_BC) -> float:
    """I(u; v) = - int (u - v)(det Hu - det Hv) dV."""
    ensure_same_grid(u, v)
    hu, hv = complex_hessian(g, u), complex_hessian(g, v)
    _validate_family(g, (v, u), (hv, hu), tol_psh, tol_bc)
    w = u.values - v.values
    gap = hermitian_det(hu).values - hermitian_det(hv).values
    return -float(np.sum(g.weights * w * gap))


def energy_J(g: Grid, u: GridField, v: GridField, m=DEFAULT_PATH_NODES, waypoints=(),
             tol_psh=DEFAULT_TOL_PSH, tol_bc=DEFAULT_TOL_BC) -> float:
    """Path energy from v to u; piecewise linear through optional waypoints."""
    ensure_same_grid(u, v, *waypoints)
    pts = [v, *waypoints, u]
    hessians = [complex_hessian(g, p) for p in pts]
    _validate_family(g, pts, hessians, tol_psh, tol_bc)
    det_base = hermitian_det(hessians[0]).values
    ts, cs = _simpson_unit(m)
    total = 0.0
    for (pa, ha), (pb, hb) in zip(zip(pts, hessians), zip(pts[1:], hessians[1:])):
        seg_dot = pb.values - pa.values
        for t, c in zip(ts, cs):
            det_t = hermitian_det(_blend(ha, hb, t)).values
            total += c * float(np.sum(g.weights * seg_dot * (det_t - det_base)))
    return -total


def energy_F0(g: Grid, u: GridField, v: GridField, m=DEFAULT_PATH_NODES,
              tol_psh=DEFAULT_TOL_PSH, tol_bc=DEFAULT_TOL_BC) -> float:
    """F0(u; v) = J(u; v) - int u det Hv dV."""
    ensure_same_grid(u, v)
    hv = complex_hessian(g, v)
    j = energy_J(g, u, v, m=m, tol_psh=tol_psh, tol_bc=tol_bc)
    return j - float(np.sum(g.weights * u.values * hermitian_det(hv).values))


def base_energy(g: Grid, v: GridField) -> float:
    """F0 of the base point itself: - int v det(Hess v) dV.

    Subtracting this recenters F0 so that base changes telescope:
    F0(u; b) - F0(w; b) = F0(u; w) - base_energy(w) for any common base b.
    """
    det = hermitian_det(complex_hessian(g, v)).values
    return -float(np.sum(g.weights * v.values * det))


def nonlinear_G(g: Grid, source: SourceTerm | BoundSource, u: GridField) -> GridField:
    """Pointwise G(z, u(z)) for a time-independent source."""
    bound = source.bind(g) if isinstance(source, SourceTerm) else source
    return GridField(g, bound.antiderivative_exp_neg(u.values))


def energy_F(g: Grid, u: GridField, v: GridField, source: SourceTerm | BoundSource,
             m=DEFAULT_PATH_NODES, tol_psh=DEFAULT_TOL_PSH, tol_bc=DEFAULT_TOL_BC) -> float:
    """Lyapunov energy F(u) = F0(u; v) + int G(z, u) dV."""
    f0 = energy_F0(g, u, v, m=m, tol_psh=tol_psh, tol_bc=tol_bc)
    gval = nonlinear_G(g, source, u)
    return f0 + integrate(g, gval)


def dissipation_Y(g: Grid, udot: GridField, u: GridField) -> float:
    """Y = int udot^2 det(Hess u) dV; requires det > 0 on the interior."""
    ensure_same_grid(udot, u)
    det = hermitian_det(complex_hessian(g, u)).values
    if float(np.min(det[g.interior])) <= 0.0:
        raise ValueError("dissipation integrand needs det(Hess u) > 0")
    return float(np.sum(g.weights * udot.values**2 * det))


@dataclass(frozen=True)
class FunctionalReport:
    """Functional values of one field relative to a fixed base point."""

    F: float
    F0: float
    I: float
    J: float
    Y: float
    base_point: str
    path_nodes: int

    def check(self, tol_q: float) -> "FunctionalReport":
        if not (self.I >= self.J - tol_q and self.J >= -tol_q):
            raise InvariantViolation(
                f"expected I >= J >= 0 up to {tol_q:.1e}, got I={self.I:.6e} J={self.J:.6e}"
            )
        return self


def evaluate_report(g: Grid, u: GridField, v: GridField, source: SourceTerm | BoundSource,
                    m=DEFAULT_PATH_NODES, udot: GridField | None = None,
                    base_point: str = "u0", tol_q: float | None = None,
                    tol_psh=DEFAULT_TOL_PSH, tol_bc=DEFAULT_TOL_BC) -> FunctionalReport:
    """Evaluate all functionals of u against the base point v in one pass."""
    ensure_same_grid(u, v)
    bound = source.bind(g) if isinstance(source, SourceTerm) else source
    hu, hv = complex_hessian(g, u), complex_hessian(g, v)
    _validate_family(g, (v, u), (hv, hu), tol_psh, tol_bc)
    det_u = hermitian_det(hu).values
    det_v = hermitian_det(hv).values

    w = u.values - v.values
    i_val = -float(np.sum(g.weights * w * (det_u - det_v)))
    ts, cs = _simpson_unit(m)
    acc = 0.0
    for t, c in zip(ts, cs):
        det_t = hermitian_det(_blend(hv, hu, t)).values
        acc += c * float(np.sum(g.weights * w * (det_t - det_v)))
    j_val = -acc
    f0_val = j_val - float(np.sum(g.weights * u.values * det_v))
    f_val = f0_val + float(np.sum(g.weights * bound.antiderivative_exp_neg(u.values)))
    if udot is None:
        udot_vals = np.log(np.maximum(det_u, 1e-300)) + bound.f(u.values)
        udot_vals[~g.interior] = 0.0
    else:
        udot_vals = udot.values
    y_val = float(np.sum(g.weights * udot_vals**2 * det_u))
    report = FunctionalReport(F=f_val, F0=f0_val, I=i_val, J=j_val, Y=y_val,
                              base_point=base_point, path_nodes=m)
    if tol_q is not None:
        report.check(tol_q)
    return report
