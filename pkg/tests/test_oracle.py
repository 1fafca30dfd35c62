"""Independent cross-checks: closed forms, refinement, variation ladders."""

import math

import numpy as np
import pytest

from maflow import DomainSpec, GridField, build_grid, integrate
from maflow.oracle import (
    CANONICAL_PAIR,
    RadialClosedForm,
    exact_functionals,
    fd_variation,
    radial_vs_full,
    refine_quadrature,
)

DISC = DomainSpec.radial(1, 1.0, 65)


def test_canonical_closed_forms():
    vals = exact_functionals(CANONICAL_PAIR)
    assert vals["I"] == pytest.approx(math.pi / 2.0, abs=1e-15)
    assert vals["J"] == pytest.approx(math.pi / 4.0, abs=1e-15)
    assert vals["F0"] == pytest.approx(math.pi / 4.0, abs=1e-15)
    assert CANONICAL_PAIR.exact_F_zero_source() == pytest.approx(math.pi / 4.0, abs=1e-15)


def test_degenerate_pair_closed_forms():
    same = RadialClosedForm(n=1, radius=1.0, alpha=1.0, c_v=0.0, beta=1.0, c_u=0.0)
    assert same.exact_I() == 0.0
    assert same.exact_J() == 0.0
    # F0 on the diagonal is minus the integral of v det(Hess v) = -pi/2
    assert same.exact_F0() == pytest.approx(-math.pi / 2.0, abs=1e-15)


def test_closed_form_guards():
    with pytest.raises(ValueError, match="boundary"):
        RadialClosedForm(n=1, radius=1.0, alpha=1.0, c_v=0.0, beta=2.0, c_u=0.0)
    with pytest.raises(ValueError, match="plurisubharmonic"):
        RadialClosedForm(n=1, radius=1.0, alpha=-1.0, c_v=2.0, beta=1.0, c_u=0.0)


def test_ball_moments():
    form = RadialClosedForm(n=2, radius=1.0, alpha=1.0, c_v=0.0, beta=2.0, c_u=-1.0)
    assert form.volume == pytest.approx(math.pi**2 / 2.0, abs=1e-15)
    assert form.moment(1) == pytest.approx(math.pi**2 / 3.0, abs=1e-15)


def test_refine_quadrature_closed_forms():
    ref = refine_quadrature(DISC, lambda xy: np.ones(len(xy)))
    assert ref.extrapolated == pytest.approx(math.pi, abs=1e-12)
    assert ref.error_estimate < 1e-12

    ref = refine_quadrature(DISC, lambda xy: np.sum(xy**2, axis=1))
    assert ref.extrapolated == pytest.approx(math.pi / 2.0, abs=1e-12)

    # Simpson converges at fourth order here, so the second-order Richardson
    # model only sharpens the estimate a little; the raw finest level is the
    # tighter number
    ref = refine_quadrature(DISC, lambda xy: np.exp(-np.sum(xy**2, axis=1)))
    exact = math.pi * (1.0 - math.exp(-1.0))
    assert ref.extrapolated == pytest.approx(exact, abs=1e-8)
    assert ref.values[-1] == pytest.approx(exact, abs=1e-9)
    assert ref.monotone


def test_refine_quadrature_needs_two_levels():
    with pytest.raises(ValueError):
        refine_quadrature(DISC, lambda xy: np.ones(len(xy)), levels=1)


def test_fd_variation_on_cubic_functional(disc33):
    g = disc33
    s = g.r**2
    u = GridField(g, s)
    w = GridField(g, s * (1.0 - s))  # vanishes on the boundary

    def functional(field):
        return integrate(g, GridField(g, field.values**3))

    rep = fd_variation(functional, u, w)
    exact = integrate(g, GridField(g, 3.0 * u.values**2 * w.values))
    assert rep.extrapolated == pytest.approx(exact, abs=1e-9)
    assert rep.observed_order is not None
    assert 1.8 <= rep.observed_order <= 2.2


def test_fd_variation_ladder_validation(disc33):
    g = disc33
    u = GridField(g, g.r**2)
    w = GridField(g, np.zeros(g.num_nodes))
    with pytest.raises(ValueError, match="ladder"):
        fd_variation(lambda f: 0.0, u, w, eps=(1e-2, 1e-3, 1e-4))
    with pytest.raises(ValueError, match="ladder"):
        fd_variation(lambda f: 0.0, u, w, eps=(1e-2, 5e-3))


def test_fd_variation_psh_guard(disc33):
    g = disc33
    u = GridField(g, g.r**2)
    huge = GridField(g, 500.0 * (1.0 - g.r**2))
    with pytest.raises(ValueError, match="cone"):
        fd_variation(lambda f: 0.0, u, huge)


def test_epsilon_pair_cross_check(disc65):
    # numeric I for u = |z|^2 + eps(1 - |z|^2) equals eps^2 pi/2 in n=1;
    # the closed-form catalogue entry agrees after matching boundary values
    from maflow import energy_I

    g = disc65
    eps = 0.1
    s = g.r**2
    v = GridField(g, s)
    u = GridField(g, s + eps * (1.0 - s))
    numeric = energy_I(g, u, v)
    form = RadialClosedForm(n=1, radius=1.0, alpha=1.0, c_v=0.0,
                            beta=1.0 - eps, c_u=eps)
    assert numeric == pytest.approx(eps**2 * math.pi / 2.0, abs=1e-12)
    assert form.exact_I() == pytest.approx(numeric, abs=1e-12)


def test_radial_vs_full_exact_on_quadratic():
    rep = radial_vs_full(lambda s: s, n=1, h=0.125)
    assert rep.max_discrepancy <= 1e-12


def test_radial_vs_full_second_order():
    reps = [radial_vs_full(lambda s: s + 0.25 * s**2, n=1, h=h)
            for h in (0.125, 0.0625)]
    assert reps[0].max_discrepancy / reps[1].max_discrepancy > 3.5
    assert reps[1].max_discrepancy < 2e-3
