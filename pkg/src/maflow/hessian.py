"""Discrete complex Hessian u_{a b-bar} and derived pointwise algebra.

With z_a = x_a + i y_a the complex Hessian is

    u_{a b-bar} = (1/4) [ (d_{x_a x_b} + d_{y_a y_b}) + i (d_{x_a y_b} - d_{y_a x_b}) ] u,

discretized with central second differences (four-point crosses for mixed
derivatives).  For n = 1 this reduces to a quarter of the Laplacian.

In radial mode a rotation invariant field u(z) = p(s), s = |z|^2, has Hessian
eigenvalues p'(s) with multiplicity n-1 (tangential) and p'(s) + s p''(s)
(radial); in terms of r-derivatives these are u_r / (2r) and
(u_rr + u_r / r) / 4, with the common limit u_rr(0) / 2 at the origin.

Hessians are defined at interior nodes; boundary rows carry an identity
placeholder so every consumer must reduce over the interior mask (quadrature
weights already do).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import solve_banded

from ._stencil import box_linear_solve, core_view
from .grid import Grid, GridField, GridMismatchError, ensure_same_grid


@dataclass
class HermitianField:
    """Hermitian n x n matrix per node, stored by structure.

    ``diag`` holds the real diagonal (box mode) or the eigenvalue pair
    (tangential, radial) in radial mode; ``off`` holds the single complex
    off-diagonal entry for box grids with n = 2 and is None otherwise.  The
    determinant is ``prod(diag) - |off|^2`` in every case.
    """

    grid: Grid
    diag: np.ndarray = dc_field(repr=False)
    off: np.ndarray | None = dc_field(default=None, repr=False)

    def __post_init__(self):
        self.diag = np.atleast_2d(np.asarray(self.diag, dtype=float))
        if self.diag.shape[0] == self.grid.num_nodes:
            pass
        elif self.diag.shape[1] == self.grid.num_nodes:
            self.diag = self.diag.T
        if self.diag.shape[0] != self.grid.num_nodes:
            raise ValueError("diagonal entries must cover every node")
        if not np.all(np.isfinite(self.diag)):
            raise ValueError("Hessian contains non-finite entries")
        if self.off is not None and not np.all(np.isfinite(self.off)):
            raise ValueError("Hessian contains non-finite entries")

    @property
    def ncols(self):
        return self.diag.shape[1]


def _radial_hessian(g: Grid, u: np.ndarray) -> HermitianField:
    num = g.num_nodes
    h = g.h
    lam_t = np.ones(num)
    lam_r = np.ones(num)
    ur = (u[2:] - u[:-2]) / (2.0 * h)
    urr = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
    r_in = g.r[1:-1]
    lam_t[1:-1] = ur / (2.0 * r_in)
    lam_r[1:-1] = 0.25 * (urr + ur / r_in)
    lam0 = (u[1] - u[0]) / h**2
    lam_t[0] = lam_r[0] = lam0
    if g.n == 1:
        return HermitianField(g, lam_r[:, None])
    return HermitianField(g, np.stack([lam_t, lam_r], axis=1))


def _box_hessian(g: Grid, u: np.ndarray) -> HermitianField:
    v = g.reshape(u)
    h = g.spacings

    def dss(axis):
        off = [0] * v.ndim
        off[axis] = 1
        up = core_view(v, tuple(off))
        off[axis] = -1
        dn = core_view(v, tuple(off))
        return (up - 2.0 * core_view(v) + dn) / h[axis] ** 2

    def cross(a, b):
        acc = np.zeros(tuple(s - 2 for s in v.shape))
        for sa in (1, -1):
            for sb in (1, -1):
                off = [0] * v.ndim
                off[a] = sa
                off[b] = sb
                acc += (sa * sb) * core_view(v, tuple(off))
        return acc / (4.0 * h[a] * h[b])

    core = tuple(slice(1, -1) for _ in v.shape)
    if g.n == 1:
        diag = np.ones(g.node_shape)
        diag[core] = 0.25 * (dss(0) + dss(1))
        return HermitianField(g, diag.ravel()[:, None])

    d1 = np.ones(g.node_shape)
    d2 = np.ones(g.node_shape)
    off = np.zeros(g.node_shape, dtype=complex)
    d1[core] = 0.25 * (dss(0) + dss(1))
    d2[core] = 0.25 * (dss(2) + dss(3))
    off[core] = 0.25 * ((cross(0, 2) + cross(1, 3)) + 1j * (cross(0, 3) - cross(1, 2)))
    diag = np.stack([d1.ravel(), d2.ravel()], axis=1)
    return HermitianField(g, diag, off.ravel())


def complex_hessian(g: Grid, u: GridField) -> HermitianField:
    """Discrete complex Hessian of u at interior nodes."""
    if not g.compatible_with(u.grid):
        raise GridMismatchError("field does not belong to this grid")
    if g.kind == "radial":
        return _radial_hessian(g, u.values)
    return _box_hessian(g, u.values)


def hermitian_det(h: HermitianField) -> GridField:
    det = np.prod(h.diag, axis=1)
    if h.off is not None:
        det = det - np.abs(h.off) ** 2
    return GridField(h.grid, det)


def min_eigenvalue(h: HermitianField) -> GridField:
    if h.off is None:
        lam = np.min(h.diag, axis=1)
    else:
        mean = 0.5 * (h.diag[:, 0] + h.diag[:, 1])
        gap = 0.5 * (h.diag[:, 0] - h.diag[:, 1])
        lam = mean - np.sqrt(gap**2 + np.abs(h.off) ** 2)
    return GridField(h.grid, lam)


def _check_invertible(h: HermitianField, what="H"):
    lam = min_eigenvalue(h).values[h.grid.interior]
    if lam.size and np.min(lam) <= 0.0:
        raise ValueError(
            f"{what} is singular or indefinite (min eigenvalue {np.min(lam):.3e})"
        )


def hermitian_inverse_apply(h: HermitianField, w: HermitianField) -> GridField:
    """Pointwise trace(H^{-1} W); real by Hermitian symmetry."""
    if not h.grid.compatible_with(w.grid):
        raise GridMismatchError("Hessian fields live on incompatible grids")
    _check_invertible(h)
    if h.off is None and w.off is None:
        tr = np.sum(w.diag / h.diag, axis=1)
    else:
        det = hermitian_det(h).values
        h_off = h.off if h.off is not None else 0.0
        w_off = w.off if w.off is not None else 0.0
        tr = (
            h.diag[:, 1] * w.diag[:, 0]
            + h.diag[:, 0] * w.diag[:, 1]
            - 2.0 * np.real(np.conj(h_off) * w_off)
        ) / det
    return GridField(h.grid, tr)


def trace_of_inverse(h: HermitianField) -> GridField:
    """Pointwise sum_a u^{a a-bar} = trace(H^{-1})."""
    _check_invertible(h)
    if h.off is None:
        tr = np.sum(1.0 / h.diag, axis=1)
    else:
        tr = (h.diag[:, 0] + h.diag[:, 1]) / hermitian_det(h).values
    return GridField(h.grid, tr)


def identity_hermitian(g: Grid) -> HermitianField:
    diag = np.ones((g.num_nodes, g.n))
    off = np.zeros(g.num_nodes, dtype=complex) if (g.kind == "box" and g.n == 2) else None
    return HermitianField(g, diag, off)


def apply_L(g: Grid, u: GridField, v: GridField, vdot: GridField, f_u) -> GridField:
    """Linearized flow operator L v = vdot - u^{a b-bar} v_{a b-bar} - f_u v.

    Diagnostic; valued at interior nodes (zero on the boundary rows).
    """
    ensure_same_grid(u, v, vdot)
    hu = complex_hessian(g, u)
    hv = complex_hessian(g, v)
    contraction = hermitian_inverse_apply(hu, hv).values
    fu_vals = f_u.values if isinstance(f_u, GridField) else np.asarray(f_u, dtype=float)
    out = np.zeros(g.num_nodes)
    mask = g.interior
    out[mask] = (vdot.values - contraction - fu_vals * v.values)[mask]
    return GridField(g, out)


def harmonic_extension(g: Grid, boundary_data) -> GridField:
    """Solve the discrete Laplace equation with the given Dirichlet data.

    ``boundary_data`` is a callable on coordinates, a scalar, or a full-length
    array; only its boundary values are used.  The solve is verified to a
    sup-norm residual of 1e-10.
    """
    from .grid import lift_boundary_data

    lifted = lift_boundary_data(g, boundary_data)
    if g.kind == "radial":
        return _radial_harmonic(g, lifted)
    sol = box_linear_solve(
        g,
        second_order={a: 1.0 for a in range(2 * g.n)},
        cross={},
        zero_order=None,
        rhs_full=np.zeros(g.num_nodes),
        boundary_values=lifted.values,
        spd=True,
        resid_tol=1e-10,
    )
    return GridField(g, sol)


def _radial_harmonic(g: Grid, lifted: GridField) -> GridField:
    num = g.num_nodes
    h = g.h
    d = 2 * g.n
    ab = np.zeros((3, num))
    rhs = np.zeros(num)
    # regularity at the origin: radial Laplacian limit d * u_rr(0) = 0
    ab[1, 0] = -2.0 * d / h**2
    ab[0, 1] = 2.0 * d / h**2
    r_in = g.r[1:-1]
    ab[0, 2:] = 1.0 / h**2 + (d - 1.0) / (2.0 * h * r_in)  # super-diagonal
    ab[1, 1:-1] = -2.0 / h**2
    ab[2, :-2] = 1.0 / h**2 - (d - 1.0) / (2.0 * h * r_in)  # sub-diagonal
    ab[1, -1] = 1.0
    ab[2, -2] = 0.0
    rhs[-1] = lifted.values[-1]
    sol = solve_banded((1, 1), ab, rhs)
    # verify the discrete Laplacian actually vanishes
    lap = np.empty(num)
    lap[0] = 2.0 * d * (sol[1] - sol[0]) / h**2
    lap[1:-1] = (sol[2:] - 2.0 * sol[1:-1] + sol[:-2]) / h**2 + (d - 1.0) / r_in * (
        sol[2:] - sol[:-2]
    ) / (2.0 * h)
    resid = float(np.max(np.abs(lap[:-1])))
    if resid > 1e-10:
        raise RuntimeError(f"harmonic extension residual {resid:.3e} exceeds 1e-10")
    return GridField(g, sol)
