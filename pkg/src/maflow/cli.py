"""Command line driver.

Four modes share one strict JSON config format: ``flow`` evolves a parabolic
problem and writes a functional trace, ``elliptic`` solves the stationary
equation by damped Newton, ``functionals`` evaluates the energy values of one
field against a base point, and ``verify`` runs seeded invariant sweeps.
Unknown config keys are rejected, as are sources with a > 0.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 invariant
violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .catalogue import FieldSpec, SourceTerm, ZERO_SOURCE
from .elliptic import StationarySpec, newton_solve
from .families import random_psh_field
from .flow import ProblemSpec, StabilityError, run_flow
from .functionals import (
    InvariantViolation,
    base_energy,
    energy_F0,
    energy_I,
    energy_J,
    evaluate_report,
)
from .grid import DomainSpec, GridField, build_grid, quadrature_tolerance
from .snapshots import write_snapshot, write_trace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INVARIANT = 4

MODES = ("flow", "elliptic", "functionals", "verify")


class ConfigError(ValueError):
    """Raised for malformed, unknown, or out-of-range configuration."""


def _check_keys(obj, path, allowed, required=()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {unknown}")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{path}: missing required key '{key}'")


def _num(obj, key, path, default=None, allow_none=False):
    if key not in obj:
        if default is None and not allow_none:
            raise ConfigError(f"{path}.{key}: missing number")
        return default
    val = obj[key]
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number")
    return float(val)


def _int(obj, key, path, default=None, allow_none=False):
    if key not in obj:
        return default
    val = obj[key]
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{path}.{key}: expected an integer")
    return val


def _bool(obj, key, path, default):
    if key not in obj:
        return default
    val = obj[key]
    if not isinstance(val, bool):
        raise ConfigError(f"{path}.{key}: expected true or false")
    return val


_FIELD_KEYS = {
    "abs2": set(),
    "quadratic": {"scale", "offset"},
    "constant": {"value"},
    "affine": {"value", "gradient"},
    "radial_poly": {"coeffs"},
    "box_bump": {"amplitude"},
    "tabulated": {"path"},
}


def _parse_field(obj, path):
    _check_keys(obj, path, {"kind"} | set().union(*_FIELD_KEYS.values()), required=("kind",))
    kind = obj["kind"]
    if kind not in _FIELD_KEYS:
        raise ConfigError(f"{path}.kind: unknown field kind '{kind}'")
    extra = sorted(set(obj) - {"kind"} - _FIELD_KEYS[kind])
    if extra:
        raise ConfigError(f"{path}: key(s) {extra} not valid for kind '{kind}'")
    if kind == "abs2":
        return FieldSpec.abs2()
    if kind == "quadratic":
        return FieldSpec.quadratic(_num(obj, "scale", path, 1.0), _num(obj, "offset", path, 0.0))
    if kind == "constant":
        return FieldSpec.constant(_num(obj, "value", path, 0.0))
    if kind == "affine":
        grad = obj.get("gradient", ())
        if not isinstance(grad, list) or any(
            isinstance(x, bool) or not isinstance(x, (int, float)) for x in grad
        ):
            raise ConfigError(f"{path}.gradient: expected a list of numbers")
        return FieldSpec.affine(_num(obj, "value", path, 0.0), grad)
    if kind == "radial_poly":
        coeffs = obj.get("coeffs", [])
        if not isinstance(coeffs, list) or any(
            isinstance(x, bool) or not isinstance(x, (int, float)) for x in coeffs
        ):
            raise ConfigError(f"{path}.coeffs: expected a list of numbers")
        return FieldSpec.radial_poly(coeffs)
    if kind == "box_bump":
        return FieldSpec.box_bump(_num(obj, "amplitude", path, 0.0))
    snap = obj.get("path")
    if not isinstance(snap, str) or not snap:
        raise ConfigError(f"{path}.path: expected a file path")
    if not Path(snap).is_file():
        raise ConfigError(f"{path}.path: no such file '{snap}'")
    return FieldSpec.tabulated(snap)


def _parse_domain(obj, path):
    _check_keys(obj, path, {"kind", "n", "radius", "nodes", "extents", "h"},
                required=("kind", "n"))
    kind = obj["kind"]
    n = _int(obj, "n", path)
    if n not in (1, 2):
        raise ConfigError(f"{path}.n: expected 1 or 2")
    try:
        if kind == "radial":
            _check_keys(obj, path, {"kind", "n", "radius", "nodes"},
                        required=("radius", "nodes"))
            return DomainSpec.radial(n, _num(obj, "radius", path), _int(obj, "nodes", path))
        if kind == "box":
            _check_keys(obj, path, {"kind", "n", "extents", "h"},
                        required=("extents", "h"))
            ext = obj["extents"]
            if (not isinstance(ext, list) or len(ext) != 2 * n
                    or any(not isinstance(p, list) or len(p) != 2 for p in ext)):
                raise ConfigError(f"{path}.extents: expected {2 * n} [lo, hi] pairs")
            return DomainSpec.box(n, tuple(tuple(map(float, p)) for p in ext), obj["h"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.kind: expected 'radial' or 'box'")


def _parse_source(obj, path):
    _check_keys(obj, path, {"a", "g", "b"})
    a = _num(obj, "a", path, 0.0)
    if a > 0.0:
        raise ConfigError(f"{path}.a: must be <= 0, got {a}")
    b = _num(obj, "b", path, 0.0)
    g = _parse_field(obj["g"], f"{path}.g") if "g" in obj else FieldSpec.constant(0.0)
    try:
        return SourceTerm(a=a, g=g, b=b)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


_FLOW_KEYS = {
    "horizon", "cfl_safety", "steady_tol", "det_floor", "path_nodes", "tol_bc",
    "tol_psh", "tol_compat", "tol_drift", "max_steps", "snapshot_every",
    "write_snapshots", "require_subsolution",
}
_ELLIPTIC_KEYS = {"tol_newton", "max_iter", "det_floor", "tol_bc"}
_FUNCTIONAL_KEYS = {"path_nodes"}
_VERIFY_KEYS = {"cases", "grids"}

_FIELD_SLOTS = {
    "flow": ({"boundary", "subsolution"}, {"initial", "reference"}),
    "elliptic": ({"boundary", "guess"}, set()),
    "functionals": ({"field", "base"}, set()),
}


class RunConfig:
    """Typed view of one parsed configuration file."""

    def __init__(self, mode, domain, fields, source, options):
        self.mode = mode
        self.domain = domain
        self.fields = fields
        self.source = source
        self.options = options


def parse_config(data, mode) -> RunConfig:
    if mode not in MODES:
        raise ConfigError(f"unknown mode '{mode}'")
    top_allowed = {"domain", "fields", "source", mode} if mode != "verify" else {"verify"}
    _check_keys(data, "config", top_allowed,
                required=() if mode == "verify" else ("domain", "fields"))
    if mode == "verify":
        section = data.get("verify", {})
        _check_keys(section, "verify", _VERIFY_KEYS)
        cases = _int(section, "cases", "verify", 200)
        if cases < 1:
            raise ConfigError("verify.cases: must be positive")
        grids = section.get("grids")
        if grids is None:
            domains = [DomainSpec.radial(1, 1.0, 513),
                       DomainSpec.box(1, ((-1.0, 1.0), (-1.0, 1.0)), 1.0 / 64)]
        else:
            if not isinstance(grids, list) or not grids:
                raise ConfigError("verify.grids: expected a non-empty list")
            domains = [_parse_domain(gobj, f"verify.grids[{i}]")
                       for i, gobj in enumerate(grids)]
        return RunConfig(mode, None, {}, ZERO_SOURCE,
                         {"cases": cases, "grids": domains})

    domain = _parse_domain(data["domain"], "domain")
    required, optional = _FIELD_SLOTS[mode]
    fobj = data["fields"]
    _check_keys(fobj, "fields", required | optional, required=tuple(sorted(required)))
    fields = {name: _parse_field(spec, f"fields.{name}") for name, spec in fobj.items()}
    source = _parse_source(data.get("source", {}), "source")

    section = data.get(mode, {})
    if mode == "flow":
        _check_keys(section, "flow", _FLOW_KEYS)
        options = {
            "horizon": _num(section, "horizon", "flow", None, allow_none=True),
            "cfl_safety": _num(section, "cfl_safety", "flow", 0.4),
            "steady_tol": _num(section, "steady_tol", "flow", None, allow_none=True),
            "det_floor": _num(section, "det_floor", "flow", 1e-12),
            "path_nodes": _int(section, "path_nodes", "flow", 9),
            "tol_bc": _num(section, "tol_bc", "flow", 1e-8),
            "tol_psh": _num(section, "tol_psh", "flow", 1e-8),
            "tol_compat": _num(section, "tol_compat", "flow", 1e-8),
            "tol_drift": _num(section, "tol_drift", "flow", None, allow_none=True),
            "max_steps": _int(section, "max_steps", "flow", 50_000_000),
            "snapshot_every": _int(section, "snapshot_every", "flow", None, allow_none=True),
            "write_snapshots": _bool(section, "write_snapshots", "flow", False),
            "require_subsolution": _bool(section, "require_subsolution", "flow", True),
        }
    elif mode == "elliptic":
        _check_keys(section, "elliptic", _ELLIPTIC_KEYS)
        options = {
            "tol_newton": _num(section, "tol_newton", "elliptic", 1e-10),
            "max_iter": _int(section, "max_iter", "elliptic", 40),
            "det_floor": _num(section, "det_floor", "elliptic", 1e-12),
            "tol_bc": _num(section, "tol_bc", "elliptic", 1e-8),
        }
    else:
        _check_keys(section, "functionals", _FUNCTIONAL_KEYS)
        options = {"path_nodes": _int(section, "path_nodes", "functionals", 9)}
    return RunConfig(mode, domain, fields, source, options)


def parse_config_file(path, mode) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config '{path}' is not valid JSON: {exc}") from exc
    return parse_config(data, mode)


def _write_json(path, payload):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _cmd_flow(cfg: RunConfig, out: Path, seed: int) -> int:
    opts = dict(cfg.options)
    snapshot_every = opts.pop("snapshot_every")
    write_snaps = opts.pop("write_snapshots")
    p = ProblemSpec(
        domain=cfg.domain,
        boundary=cfg.fields["boundary"],
        subsolution=cfg.fields["subsolution"],
        source=cfg.source,
        initial=cfg.fields.get("initial"),
        reference=cfg.fields.get("reference"),
        **opts,
    )
    writer = None
    if write_snaps:
        written = set()

        def writer(state):
            if state.steps not in written:
                written.add(state.steps)
                write_snapshot(state.u, out / f"step_{state.steps:09d}.snap",
                               f"step {state.steps}")

    res = run_flow(p, snapshot_every=snapshot_every, snapshot_writer=writer)
    write_trace(res.rows, out / "trace.csv")
    write_snapshot(res.base, out / "initial.snap", "initial")
    write_snapshot(res.state.u, out / "final.snap", "final")
    summary = {
        "reason": res.reason,
        "steps": res.state.steps,
        "t_final": res.state.t,
        "sup_udot": res.state.sup_udot,
        "F_initial": res.rows[0].F,
        "F_final": res.rows[-1].F,
        "det_min": res.state.det_min,
        "det_max": res.state.det_max,
        "compatibility": {
            "max_abs_r0": res.compatibility.max_abs_r0,
            "r1": res.compatibility.r1,
            "satisfied": res.compatibility.satisfied,
        },
        "subsolution": {
            "passed": res.subsolution_report.passed,
            "interior_residual": res.subsolution_report.interior_residual,
            "boundary_gap": res.subsolution_report.boundary_gap,
        },
        "monitors": {
            "within_bounds": res.monitors.within_bounds,
            "m0": res.monitors.m0,
            "barrier": res.monitors.barrier,
            "trace_ok": res.monitors.trace_ok,
        },
        "sup_err_vs_ref": res.rows[-1].sup_err_vs_ref,
    }
    _write_json(out / "summary.json", summary)
    return EXIT_OK


def _cmd_elliptic(cfg: RunConfig, out: Path, seed: int) -> int:
    spec = StationarySpec(
        domain=cfg.domain,
        boundary=cfg.fields["boundary"],
        guess=cfg.fields["guess"],
        source=cfg.source,
        **cfg.options,
    )
    rep = newton_solve(spec)
    write_snapshot(rep.v, out / "solution.snap", "solution")
    _write_json(out / "summary.json", {
        "converged": rep.converged,
        "iterations": rep.iterations,
        "sup_residual": rep.sup_residual,
        "det_residual_sup": rep.det_residual_sup,
        "residual_history": rep.residual_history,
        "damping_history": rep.damping_history,
    })
    return EXIT_OK if rep.converged else EXIT_NUMERICAL


def _cmd_functionals(cfg: RunConfig, out: Path, seed: int) -> int:
    g = build_grid(cfg.domain)
    u = cfg.fields["field"].evaluate(g)
    base = cfg.fields["base"].evaluate(g)
    tol_q = quadrature_tolerance(g, u, base)
    rep = evaluate_report(g, u, base, cfg.source, m=cfg.options["path_nodes"])
    violation = None
    try:
        rep.check(tol_q)
    except InvariantViolation as exc:
        violation = str(exc)
    _write_json(out / "report.json", {
        "F": rep.F, "F0": rep.F0, "I": rep.I, "J": rep.J, "Y": rep.Y,
        "path_nodes": rep.path_nodes, "tol_q": tol_q,
        "invariant_ok": violation is None,
        "violation": violation,
    })
    return EXIT_OK if violation is None else EXIT_INVARIANT


def _cmd_verify(cfg: RunConfig, out: Path, seed: int) -> int:
    rng = np.random.default_rng(seed)
    grids = [build_grid(dom) for dom in cfg.options["grids"]]
    cases = cfg.options["cases"]
    failures = []
    worst = {"order_gap": 0.0, "positivity_gap": 0.0, "convexity": 0.0,
             "cocycle": 0.0, "path_independence": 0.0, "symmetry": 0.0}
    for g in grids:
        gname = f"{g.kind}-n{g.n}-{'x'.join(map(str, g.node_shape))}"
        for k in range(cases):
            u1 = random_psh_field(g, rng)
            u2 = random_psh_field(g, rng)
            base = random_psh_field(g, rng)
            mid = GridField(g, 0.5 * (u1.values + u2.values))
            tol = quadrature_tolerance(g, u1, u2, base)
            rep1 = evaluate_report(g, u1, base, ZERO_SOURCE)
            rep2 = evaluate_report(g, u2, base, ZERO_SOURCE)
            f0_mid = energy_F0(g, mid, base)
            f0_21 = energy_F0(g, u2, u1)
            j_direct = rep2.J
            j_via = energy_J(g, u2, base, waypoints=(u1,))
            checks = {
                "order_gap": max(0.0, rep1.J - rep1.I, rep2.J - rep2.I),
                "positivity_gap": max(0.0, -rep1.J, -rep2.J),
                "convexity": max(0.0, f0_mid - 0.5 * (rep1.F0 + rep2.F0)),
                "cocycle": abs(rep1.F0 + (f0_21 - base_energy(g, u1)) - rep2.F0),
                "path_independence": abs(j_via - j_direct),
                "symmetry": abs(rep1.I - energy_I(g, base, u1)),
            }
            for name, val in checks.items():
                worst[name] = max(worst[name], val)
            bound = {name: 4.0 * tol for name in checks}
            bad = {name: val for name, val in checks.items() if val > bound[name]}
            if bad:
                failures.append({"grid": gname, "case": k, "violations": bad})
    _write_json(out / "report.json", {
        "seed": seed,
        "cases_per_grid": cases,
        "grids": [f"{g.kind}-n{g.n}-{'x'.join(map(str, g.node_shape))}" for g in grids],
        "worst": worst,
        "failures": failures,
        "passed": not failures,
    })
    return EXIT_OK if not failures else EXIT_INVARIANT


_DISPATCH = {
    "flow": _cmd_flow,
    "elliptic": _cmd_elliptic,
    "functionals": _cmd_functionals,
    "verify": _cmd_verify,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="maflow",
        description="Monge-Ampere flows, stationary solves, and energy functionals.",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="path to a JSON config file")
    parser.add_argument("--out", default="maflow-out", help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="seed for seeded modes")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if not 0 <= args.seed < 2**64:
        print("config error: --seed must fit in an unsigned 64-bit integer",
              file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config_file(args.config, args.mode)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _DISPATCH[args.mode](cfg, out, args.seed)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (StabilityError, RuntimeError, ValueError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
