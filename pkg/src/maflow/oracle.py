"""Independent cross-checks: closed forms, refinement studies, variations.

Everything here is deliberately computed by a route different from the main
modules: hand-integrated closed forms for quadratic radial pairs, Richardson
refinement of quadrature, centered finite differences of functionals, and
radial-versus-box evaluation of the same rotation invariant profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import DomainSpec, GridField, build_grid, integrate
from .hessian import complex_hessian, hermitian_det, min_eigenvalue


@dataclass(frozen=True)
class RadialClosedForm:
    """Pair of quadratic radial fields u = beta s + c_u, v = alpha s + c_v
    (s = |z|^2) with equal boundary values on the disc/ball of radius R.

    All functionals of the pair reduce to moments of s and are integrated
    by hand here.
    """

    n: int
    radius: float
    alpha: float
    c_v: float
    beta: float
    c_u: float

    def __post_init__(self):
        r2 = self.radius**2
        gap = (self.beta * r2 + self.c_u) - (self.alpha * r2 + self.c_v)
        if abs(gap) > 1e-12 * max(1.0, abs(self.beta * r2), abs(self.alpha * r2)):
            raise ValueError(f"boundary values differ by {gap:.3e}; pair is inadmissible")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("both fields must be strictly plurisubharmonic")

    def moment(self, k: int) -> float:
        """integral of s^k over the domain."""
        r = self.radius
        if self.n == 1:
            return math.pi * r ** (2 * k + 2) / (k + 1)
        return math.pi**2 * r ** (2 * k + 4) / (k + 2)

    @property
    def volume(self) -> float:
        return self.moment(0)

    def exact_I(self) -> float:
        gap = self.beta - self.alpha
        det_gap = self.beta**self.n - self.alpha**self.n
        return gap * det_gap * (self.radius**2 * self.volume - self.moment(1))

    def exact_J(self) -> float:
        gap = self.beta - self.alpha
        shape = self.radius**2 * self.volume - self.moment(1)
        if self.n == 1:
            return 0.5 * gap**2 * shape
        return gap**2 * (self.beta + 2.0 * self.alpha) / 3.0 * shape

    def exact_F0(self) -> float:
        int_u = self.beta * self.moment(1) + self.c_u * self.volume
        return self.exact_J() - self.alpha**self.n * int_u

    def exact_F_zero_source(self) -> float:
        """F for f identically zero, where G(z, s) = s."""
        return self.exact_F0() + self.beta * self.moment(1) + self.c_u * self.volume

    def fields(self, grid):
        s = grid.r**2
        u = GridField(grid, self.beta * s + self.c_u)
        v = GridField(grid, self.alpha * s + self.c_v)
        return u, v


CANONICAL_PAIR = RadialClosedForm(n=1, radius=1.0, alpha=1.0, c_v=0.0, beta=2.0, c_u=-1.0)


def exact_functionals(form: RadialClosedForm) -> dict:
    return {
        "I": form.exact_I(),
        "J": form.exact_J(),
        "F0": form.exact_F0(),
    }


@dataclass(frozen=True)
class QuadratureRefinement:
    values: tuple
    extrapolated: float
    error_estimate: float
    observed_order: float | None
    monotone: bool


def _refine_spec(spec: DomainSpec) -> DomainSpec:
    if spec.kind == "radial":
        return DomainSpec.radial(spec.n, spec.radius, 2 * spec.nodes - 1)
    return DomainSpec.box(spec.n, spec.extents, [h / 2.0 for h in spec.spacings])


def refine_quadrature(spec: DomainSpec, integrand, levels: int = 3) -> QuadratureRefinement:
    """Integrate ``integrand(coords)`` on successively halved grids.

    Richardson-extrapolates assuming second order and estimates the error of
    the finest value.  Refinement that fails to approach the extrapolated
    limit is flagged as non-monotone.
    """
    if levels < 2:
        raise ValueError("need at least two refinement levels")
    values = []
    cur = spec
    for _ in range(levels):
        g = build_grid(cur)
        vals = np.asarray(integrand(g.coords), dtype=float)
        values.append(integrate(g, GridField(g, vals)))
        cur = _refine_spec(cur)
    extrap = (4.0 * values[-1] - values[-2]) / 3.0
    err = abs(values[-1] - extrap)
    scale = max(1.0, max(abs(v) for v in values))
    order = None
    if levels >= 3:
        d1 = values[-2] - values[-3]
        d2 = values[-1] - values[-2]
        if abs(d2) > 1e-14 * scale and abs(d1) > abs(d2):
            order = math.log2(abs(d1) / abs(d2))
    gaps = [abs(v - extrap) for v in values]
    monotone = all(b <= a + 1e-14 * scale for a, b in zip(gaps, gaps[1:]))
    return QuadratureRefinement(tuple(values), extrap, err, order, monotone)


@dataclass(frozen=True)
class VariationReport:
    eps: tuple
    derivatives: tuple
    extrapolated: float
    observed_order: float | None


def fd_variation(functional, u: GridField, w: GridField,
                 eps=(1e-2, 5e-3, 2.5e-3)) -> VariationReport:
    """Centered differences of a functional along direction w.

    The ladder must halve; the last three values give a Richardson
    extrapolation and an observed order (about 2 for smooth functionals with
    a genuine third variation; None when the differences sit at rounding
    level, e.g. when the functional is exactly quadratic along the ray).
    """
    eps = tuple(float(e) for e in eps)
    if len(eps) < 3 or any(not 0.4 < b / a < 0.6 for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon ladder must halve and hold at least three values")
    g = u.grid
    for sign in (+1.0, -1.0):
        probe = GridField(g, u.values + sign * eps[0] * w.values)
        lam = float(np.min(min_eigenvalue(complex_hessian(g, probe)).values[g.interior]))
        if lam <= 0.0:
            raise ValueError(
                f"perturbed field leaves the plurisubharmonic cone (min eig {lam:.3e})"
            )
    derivs = []
    for e in eps:
        up = functional(GridField(g, u.values + e * w.values))
        dn = functional(GridField(g, u.values - e * w.values))
        derivs.append((up - dn) / (2.0 * e))
    d1 = derivs[-2] - derivs[-3]
    d2 = derivs[-1] - derivs[-2]
    extrap = derivs[-1] + (derivs[-1] - derivs[-2]) / 3.0
    scale = max(1.0, max(abs(d) for d in derivs))
    order = None
    if abs(d2) > 1e-12 * scale and abs(d1) > abs(d2):
        order = math.log2(abs(d1) / abs(d2))
    return VariationReport(eps, tuple(derivs), extrap, order)


@dataclass(frozen=True)
class RadialVsFull:
    max_discrepancy: float
    rel_discrepancy: float
    h: float


def radial_vs_full(profile, n: int, h: float, halfwidth: float = 1.0) -> RadialVsFull:
    """Compare determinants of a rotation invariant field across both modes.

    ``profile`` maps s = |z|^2 to field values.  The field is sampled on a box
    grid as profile(|z|^2) and on a radial grid with the same spacing; the
    radial determinant is interpolated to the box node radii.  Both stencils
    are exact on quadratics, so profile(s) = s yields rounding-level
    discrepancy; generic smooth profiles give O(h^2).
    """
    box = build_grid(DomainSpec.box(n, [(-halfwidth, halfwidth)] * (2 * n), h))
    s_box = np.sum(box.coords**2, axis=1)
    det_box = hermitian_det(complex_hessian(box, GridField(box, profile(s_box)))).values

    r_box = np.sqrt(s_box[box.interior])
    nodes = int(math.floor(r_box.max() / h)) + 3
    radial = build_grid(DomainSpec.radial(n, (nodes - 1) * h, nodes))
    det_rad = hermitian_det(complex_hessian(radial, GridField(radial, profile(radial.r**2)))).values
    interp = np.interp(r_box, radial.r[:-1], det_rad[:-1])

    gap = float(np.max(np.abs(det_box[box.interior] - interp)))
    scale = float(np.max(np.abs(det_box[box.interior])))
    return RadialVsFull(gap, gap / max(scale, 1e-300), h)
