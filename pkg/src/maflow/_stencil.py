"""Sparse assembly and solves for second-order stencil operators on box grids.

Operators have the form

    L w = sum_a  c_a * D_aa w  +  sum_(a,b)  d_ab * X_ab w  +  c0 * w

where D_aa is the central second difference along real axis a and X_ab the
four-point cross difference between distinct real axes.  Dirichlet data is
eliminated into the right-hand side; the system is solved on interior nodes.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

_DIRECT_CUTOFF = 20000


def core_view(arr, offset=None):
    """View of the interior core of an nd-array, optionally shifted."""
    if offset is None:
        offset = (0,) * arr.ndim
    return arr[tuple(slice(1 + o, s - 1 + o) for o, s in zip(offset, arr.shape))]


def _unit(ndim, axis, sign):
    off = [0] * ndim
    off[axis] = sign
    return tuple(off)


def _accumulate_terms(g, second_order, cross, zero_order):
    """Yield (offset, coefficient-array-on-core) pairs, center terms merged."""
    ndim = len(g.node_shape)
    core_shape = tuple(s - 2 for s in g.node_shape)
    center = np.zeros(core_shape)
    if zero_order is not None:
        center += zero_order
    terms = []
    for axis, c in second_order.items():
        inv_h2 = 1.0 / g.spacings[axis] ** 2
        terms.append((_unit(ndim, axis, +1), c * inv_h2))
        terms.append((_unit(ndim, axis, -1), c * inv_h2))
        center -= 2.0 * c * inv_h2
    for (a, b), d in cross.items():
        scale = 1.0 / (4.0 * g.spacings[a] * g.spacings[b])
        for sa in (+1, -1):
            for sb in (+1, -1):
                off = [0] * ndim
                off[a] = sa
                off[b] = sb
                terms.append((tuple(off), (sa * sb) * d * scale))
    terms.append(((0,) * ndim, center))
    return terms


def box_linear_solve(
    g,
    second_order,
    cross,
    zero_order,
    rhs_full,
    boundary_values,
    spd=False,
    resid_tol=1e-10,
):
    """Solve L w = rhs on interior nodes with Dirichlet data on the boundary.

    Coefficient arrays are defined on the interior core (full core shape or
    scalar).  Returns the full-length solution with the boundary data written
    in.  Raises RuntimeError if the verified residual exceeds ``resid_tol``.
    """
    shape = g.node_shape
    core_shape = tuple(s - 2 for s in shape)

    def on_core(c):
        if np.isscalar(c):
            return np.full(core_shape, float(c))
        return np.broadcast_to(np.asarray(c, dtype=float), core_shape)

    second_order = {a: on_core(c) for a, c in second_order.items()}
    cross = {ab: on_core(d) for ab, d in cross.items()}
    zero_order = on_core(zero_order) if zero_order is not None else None

    idx = np.arange(g.num_nodes).reshape(shape)
    interior_ids = core_view(idx).ravel()
    ni = interior_ids.size
    compact = np.full(g.num_nodes, -1, dtype=np.int64)
    compact[interior_ids] = np.arange(ni)

    rhs = np.asarray(rhs_full, dtype=float).ravel()[interior_ids].copy()
    bvals = np.asarray(boundary_values, dtype=float).ravel()

    rows, cols, data = [], [], []
    row_ids = np.arange(ni)
    for offset, coeff in _accumulate_terms(g, second_order, cross, zero_order):
        nbr = core_view(idx, offset).ravel()
        cvals = np.ascontiguousarray(coeff).ravel()
        is_int = compact[nbr] >= 0
        rows.append(row_ids[is_int])
        cols.append(compact[nbr[is_int]])
        data.append(cvals[is_int])
        if not np.all(is_int):
            ext = ~is_int
            np.subtract.at(rhs, row_ids[ext], cvals[ext] * bvals[nbr[ext]])

    mat = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ni, ni),
    )

    if ni <= _DIRECT_CUTOFF:
        sol = spla.spsolve(mat.tocsc(), rhs)
    elif spd:
        # elliptic operators here are negative definite; CG wants SPD.  The
        # final sup-norm residual check below is authoritative, so iteration
        # flags are ignored.
        sol, _ = spla.cg(-mat, -rhs, rtol=0.0, atol=0.02 * resid_tol, maxiter=20000)
    else:
        ilu = spla.spilu(mat.tocsc(), drop_tol=1e-5, fill_factor=20)
        precond = spla.LinearOperator(mat.shape, ilu.solve)
        sol, _ = spla.bicgstab(
            mat, rhs, rtol=0.0, atol=0.02 * resid_tol, maxiter=20000, M=precond
        )

    resid = float(np.max(np.abs(mat @ sol - rhs))) if ni else 0.0
    if not np.isfinite(resid) or resid > resid_tol:
        raise RuntimeError(f"linear solve residual {resid:.3e} exceeds {resid_tol:.1e}")

    out = np.zeros(g.num_nodes)
    out[g.boundary] = bvals[g.boundary]
    out[interior_ids] = sol
    return out
