"""Seeded families of strictly plurisubharmonic fields for property checks.

Every field is |z|^2 plus a compactly supported perturbation, so traces on
the domain boundary agree across a family and every functional of a pair is
well defined.  Amplitudes are shrunk until the smallest interior eigenvalue
of the complex Hessian clears a safety margin.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid, GridField
from .hessian import complex_hessian, min_eigenvalue

EIG_MARGIN = 1e-3


def _bump(t: np.ndarray) -> np.ndarray:
    """Compact C^3 bump (1 - t^2)^4 on |t| < 1, zero outside."""
    out = np.zeros_like(t)
    m = np.abs(t) < 1.0
    out[m] = (1.0 - t[m] ** 2) ** 4
    return out


def _base(g: Grid) -> np.ndarray:
    if g.kind == "radial":
        return g.r**2
    return np.sum(g.coords**2, axis=1)


def _perturbation(g: Grid, rng: np.random.Generator) -> np.ndarray:
    if g.kind == "radial":
        width = rng.uniform(0.25, 0.4) * g.spec.radius
        lo, hi = 0.1 * g.spec.radius + width, 0.95 * g.spec.radius - width
        center = rng.uniform(lo, max(lo, hi))
        return _bump((g.r - center) / width)
    half = 0.5 * min(b - a for a, b in g.spec.extents)
    width = rng.uniform(0.5, 0.7) * half
    center = rng.uniform(-0.25 * half, 0.25 * half, size=g.coords.shape[1])
    dist = np.sqrt(np.sum((g.coords - center) ** 2, axis=1))
    return _bump(dist / width)


def random_psh_field(g: Grid, rng: np.random.Generator, max_tries: int = 12) -> GridField:
    """|z|^2 plus a random interior bump, strictly psh by construction."""
    pert = _perturbation(g, rng)
    eps = rng.uniform(0.02, 0.12) * rng.choice([-1.0, 1.0])
    base = _base(g)
    for _ in range(max_tries):
        field = GridField(g, base + eps * pert)
        eig = min_eigenvalue(complex_hessian(g, field)).values[g.interior]
        if eig.size == 0 or float(np.min(eig)) > EIG_MARGIN:
            return field
        eps *= 0.5
    return GridField(g, base)


def random_psh_pair(g: Grid, rng: np.random.Generator):
    """Two independent fields with identical boundary traces."""
    return random_psh_field(g, rng), random_psh_field(g, rng)
