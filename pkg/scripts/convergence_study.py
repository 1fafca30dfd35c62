"""Mesh refinement study on the manufactured quartic family.

u = s + s^2/4 with s = |z|^2 solves det(Hess u) = 1 + s on the unit disc, so
g = -log(1 + s) makes it a stationary point.  The script reports, across a
ladder of halved spacings, the sup errors of the discrete determinant, the
Newton solution, and the flow steady state, together with observed orders.

Usage: python3 scripts/convergence_study.py [--levels 3] [--base-nodes 65]
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from maflow import (  # noqa: E402
    DomainSpec,
    FieldSpec,
    GridField,
    ProblemSpec,
    SourceTerm,
    StationarySpec,
    build_grid,
    complex_hessian,
    hermitian_det,
    newton_solve,
    run_flow,
)


def study(levels, base_nodes):
    rows = []
    nodes = base_nodes
    for _ in range(levels):
        g = build_grid(DomainSpec.radial(1, 1.0, nodes))
        s = g.r**2
        exact = s + 0.25 * s**2
        source = SourceTerm(a=0.0, g=FieldSpec.from_values(-np.log1p(s)))
        boundary = FieldSpec.radial_poly((0.0, 1.0, 0.25))
        guess = FieldSpec.radial_poly((-0.75, 2.0))

        det = hermitian_det(complex_hessian(g, GridField(g, exact))).values
        e_hess = float(np.max(np.abs((det - (1.0 + s))[g.interior])))

        newton = newton_solve(StationarySpec(
            domain=g.spec, boundary=boundary, guess=guess, source=source), g)
        e_newton = float(np.max(np.abs(newton.v.values - exact)))

        res = run_flow(ProblemSpec(
            domain=g.spec, boundary=boundary, subsolution=guess, source=source,
            cfl_safety=4.0, steady_tol=1e-10))
        e_flow = float(np.max(np.abs(res.state.u.values - exact)))

        rows.append((g.h, e_hess, e_newton, e_flow))
        nodes = 2 * nodes - 1
    return rows


def print_table(rows):
    def order(prev, cur):
        return math.log2(prev / cur) if prev > 0 and cur > 0 else float("nan")

    header = f"{'h':>12} {'det err':>12} {'ord':>5} {'newton err':>12} {'ord':>5} {'flow err':>12} {'ord':>5}"
    print(header)
    print("-" * len(header))
    for k, (h, e1, e2, e3) in enumerate(rows):
        if k == 0:
            print(f"{h:12.3e} {e1:12.3e} {'':>5} {e2:12.3e} {'':>5} {e3:12.3e}")
        else:
            p1 = order(rows[k - 1][1], e1)
            p2 = order(rows[k - 1][2], e2)
            p3 = order(rows[k - 1][3], e3)
            print(f"{h:12.3e} {e1:12.3e} {p1:5.2f} {e2:12.3e} {p2:5.2f} "
                  f"{e3:12.3e} {p3:5.2f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--levels", type=int, default=3)
    parser.add_argument("--base-nodes", type=int, default=65)
    args = parser.parse_args()
    print_table(study(args.levels, args.base_nodes))


if __name__ == "__main__":
    main()
