"""Catalogue of named field families and the source term f(t, z, u).

Fields are described symbolically and evaluated on a grid; radial grids only
accept rotation invariant families.  The source term is restricted to

    f(t, z, u) = a * u + g(z) + b * t        with  a <= 0,

which keeps f_u = a <= 0 and f_uu = 0.  For time-independent sources (b = 0)
the antiderivative  G(z, s) = integral_0^s exp(-f(z, tau)) d tau  has the
closed form  exp(-g) * (1 - exp(-a s)) / a  (or s * exp(-g) when a = 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import Grid, GridField

_RADIAL_KINDS = {"abs2", "quadratic", "constant", "radial_poly", "tabulated", "array"}


@dataclass(frozen=True)
class FieldSpec:
    """Symbolic description of a scalar field on the domain.

    Kinds: ``abs2`` (|z|^2), ``quadratic`` (scale |z|^2 + offset), ``constant``,
    ``affine`` (value + gradient . x over real coordinates), ``radial_poly``
    (polynomial in s = |z|^2), ``box_bump`` (|z|^2 minus amplitude times the
    product of per-axis parabolas vanishing on the box faces), ``tabulated``
    (snapshot file), ``array`` (values supplied in memory).
    """

    kind: str
    scale: float = 1.0
    offset: float = 0.0
    value: float = 0.0
    gradient: tuple = ()
    coeffs: tuple = ()
    amplitude: float = 0.0
    path: str = ""
    values: tuple = dc_field(default=(), repr=False)

    @classmethod
    def abs2(cls):
        return cls(kind="abs2")

    @classmethod
    def quadratic(cls, scale, offset=0.0):
        return cls(kind="quadratic", scale=float(scale), offset=float(offset))

    @classmethod
    def constant(cls, value):
        return cls(kind="constant", value=float(value))

    @classmethod
    def affine(cls, value, gradient):
        return cls(kind="affine", value=float(value), gradient=tuple(float(v) for v in gradient))

    @classmethod
    def radial_poly(cls, coeffs):
        return cls(kind="radial_poly", coeffs=tuple(float(c) for c in coeffs))

    @classmethod
    def box_bump(cls, amplitude):
        return cls(kind="box_bump", amplitude=float(amplitude))

    @classmethod
    def tabulated(cls, path):
        return cls(kind="tabulated", path=str(path))

    @classmethod
    def from_values(cls, values):
        return cls(kind="array", values=tuple(float(v) for v in np.ravel(values)))

    def evaluate(self, g: Grid) -> GridField:
        if g.kind == "radial" and self.kind not in _RADIAL_KINDS:
            raise ValueError(f"field kind {self.kind!r} is not rotation invariant")
        s = np.sum(g.coords**2, axis=1)
        if self.kind == "abs2":
            vals = s
        elif self.kind == "quadratic":
            vals = self.scale * s + self.offset
        elif self.kind == "constant":
            vals = np.full(g.num_nodes, self.value)
        elif self.kind == "affine":
            grad = np.asarray(self.gradient, dtype=float)
            if grad.size != g.coords.shape[1]:
                raise ValueError(
                    f"affine gradient needs {g.coords.shape[1]} components, got {grad.size}"
                )
            vals = self.value + g.coords @ grad
        elif self.kind == "radial_poly":
            vals = np.zeros(g.num_nodes)
            for c in reversed(self.coeffs):
                vals = vals * s + c
        elif self.kind == "box_bump":
            prof = np.ones(g.num_nodes)
            for axis, (lo, hi) in enumerate(g.spec.extents):
                t = (2.0 * g.coords[:, axis] - (lo + hi)) / (hi - lo)
                prof *= 1.0 - t**2
            vals = s - self.amplitude * prof
        elif self.kind == "tabulated":
            from .snapshots import read_snapshot

            field, _ = read_snapshot(self.path, grid=g)
            return field
        elif self.kind == "array":
            vals = np.asarray(self.values, dtype=float)
        else:
            raise ValueError(f"unknown field kind {self.kind!r}")
        return GridField(g, vals)


@dataclass(frozen=True)
class SourceTerm:
    """f(t, z, u) = a u + g(z) + b t with a <= 0."""

    a: float = 0.0
    g: FieldSpec = dc_field(default_factory=lambda: FieldSpec.constant(0.0))
    b: float = 0.0

    def __post_init__(self):
        if self.a > 0.0:
            raise ValueError(f"source coefficient a must satisfy a <= 0, got {self.a}")

    @property
    def time_dependent(self) -> bool:
        return self.b != 0.0

    def bind(self, grid: Grid) -> "BoundSource":
        return BoundSource(self.a, self.g.evaluate(grid).values, self.b)


ZERO_SOURCE = SourceTerm()


class BoundSource:
    """Source term with g evaluated on a fixed grid."""

    def __init__(self, a, g_values, b):
        self.a = float(a)
        self.g_values = np.asarray(g_values, dtype=float)
        self.b = float(b)

    def f(self, u_values, t=0.0):
        return self.a * u_values + self.g_values + self.b * t

    @property
    def f_u(self):
        return self.a

    @property
    def f_t(self):
        return self.b

    def exp_neg_f(self, u_values, t=0.0):
        return np.exp(-self.f(u_values, t))

    def antiderivative_exp_neg(self, s_values):
        """G(z, s) for time-independent sources."""
        if self.b != 0.0:
            raise ValueError("G(z, s) requires a time-independent source (b = 0)")
        eg = np.exp(-self.g_values)
        if self.a == 0.0:
            return eg * s_values
        return eg * (1.0 - np.exp(-self.a * s_values)) / self.a
