"""Command line interface: config validation, artifacts, exit codes."""

import json
import math

import numpy as np
import pytest

from maflow import read_snapshot, read_trace
from maflow.cli import ConfigError, main, parse_config

TRACE_HEADER = "t,F,F0,I,J,Y,det_min,det_max,sup_udot,sup_grad,sup_hess,sup_err_vs_ref"


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def flow_config(**flow_opts):
    opts = {"cfl_safety": 2.0, "steady_tol": 1e-7}
    opts.update(flow_opts)
    return {
        "domain": {"kind": "radial", "n": 1, "radius": 1.0, "nodes": 33},
        "fields": {
            "boundary": {"kind": "abs2"},
            "subsolution": {"kind": "quadratic", "scale": 2.0, "offset": -1.0},
            "reference": {"kind": "abs2"},
        },
        "flow": opts,
    }


def test_functionals_mode_reports_closed_forms(tmp_path):
    cfg = write_config(tmp_path, {
        "domain": {"kind": "radial", "n": 1, "radius": 1.0, "nodes": 129},
        "fields": {
            "field": {"kind": "quadratic", "scale": 2.0, "offset": -1.0},
            "base": {"kind": "abs2"},
        },
    })
    out = tmp_path / "out"
    assert main(["functionals", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["I"] == pytest.approx(math.pi / 2.0, abs=1e-10)
    assert report["J"] == pytest.approx(math.pi / 4.0, abs=1e-10)
    assert report["F0"] == pytest.approx(math.pi / 4.0, abs=1e-10)
    assert report["invariant_ok"]


def test_flow_mode_artifacts(tmp_path):
    cfg = write_config(tmp_path, flow_config())
    out = tmp_path / "run"
    assert main(["flow", "--config", cfg, "--out", str(out)]) == 0

    text = (out / "trace.csv").read_text()
    assert text.splitlines()[0] == TRACE_HEADER
    rows = read_trace(out / "trace.csv")
    assert len(rows) >= 2
    fs = [row["F"] for row in rows]
    assert all(b <= a + 1e-7 for a, b in zip(fs, fs[1:]))

    summary = json.loads((out / "summary.json").read_text())
    assert summary["reason"] == "steady"
    assert summary["sup_udot"] <= 1e-7
    assert summary["sup_err_vs_ref"] <= 1e-5
    assert not summary["compatibility"]["satisfied"]  # log 2 violation, still runs
    assert summary["subsolution"]["passed"]
    assert summary["monitors"]["within_bounds"]

    final, name = read_snapshot(out / "final.snap")
    assert name == "final"
    err = float(np.max(np.abs(final.values - final.grid.r**2)))
    assert err <= 1e-5
    initial, _ = read_snapshot(out / "initial.snap")
    assert initial.values[0] == pytest.approx(-1.0)


def test_flow_trace_bytes_deterministic(tmp_path):
    cfg = write_config(tmp_path, flow_config())
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["flow", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["flow", "--config", cfg, "--out", str(out2)]) == 0
    assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()
    assert (out1 / "final.snap").read_bytes() == (out2 / "final.snap").read_bytes()


def test_flow_step_snapshots(tmp_path):
    cfg = write_config(tmp_path, flow_config(write_snapshots=True, snapshot_every=5000))
    out = tmp_path / "snaps"
    assert main(["flow", "--config", cfg, "--out", str(out)]) == 0
    steps = sorted(out.glob("step_*.snap"))
    assert steps, "expected per-step snapshots"
    first, name = read_snapshot(steps[0])
    assert name.startswith("step")


def test_elliptic_mode(tmp_path):
    cfg = write_config(tmp_path, {
        "domain": {"kind": "radial", "n": 1, "radius": 1.0, "nodes": 65},
        "fields": {
            "boundary": {"kind": "abs2"},
            "guess": {"kind": "quadratic", "scale": 2.0, "offset": -1.0},
        },
    })
    out = tmp_path / "newton"
    assert main(["elliptic", "--config", cfg, "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["converged"]
    assert summary["sup_residual"] <= 1e-10
    solution, _ = read_snapshot(out / "solution.snap")
    err = float(np.max(np.abs(solution.values - solution.grid.r**2)))
    assert err <= 1e-9


def test_elliptic_nonconvergence_exit_code(tmp_path):
    cfg = write_config(tmp_path, {
        "domain": {"kind": "radial", "n": 1, "radius": 1.0, "nodes": 65},
        "fields": {
            "boundary": {"kind": "abs2"},
            "guess": {"kind": "quadratic", "scale": 2.0, "offset": -1.0},
        },
        "elliptic": {"max_iter": 1},
    })
    assert main(["elliptic", "--config", cfg, "--out", str(tmp_path / "x")]) == 3


def test_verify_mode(tmp_path):
    cfg = write_config(tmp_path, {
        "verify": {
            "cases": 5,
            "grids": [
                {"kind": "radial", "n": 1, "radius": 1.0, "nodes": 513},
                {"kind": "box", "n": 1, "extents": [[-1.0, 1.0], [-1.0, 1.0]], "h": 0.125},
            ],
        },
    })
    out = tmp_path / "verify"
    assert main(["verify", "--config", cfg, "--out", str(out), "--seed", "1"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["passed"]
    assert not report["failures"]
    assert set(report["worst"]) == {
        "order_gap", "positivity_gap", "convexity", "cocycle",
        "path_independence", "symmetry",
    }
    assert report["seed"] == 1


def test_flow_invariant_abort_maps_to_exit_4(tmp_path):
    # a negative drift allowance turns the normal descent of F into a
    # reported violation; exercises the invariant exit path end to end
    cfg = write_config(tmp_path, flow_config(tol_drift=-1.0))
    assert main(["flow", "--config", cfg, "--out", str(tmp_path / "x")]) == 4


def test_unstable_run_maps_to_exit_3(tmp_path):
    cfg = write_config(tmp_path, flow_config(max_steps=10, steady_tol=1e-14))
    assert main(["flow", "--config", cfg, "--out", str(tmp_path / "x")]) == 3


@pytest.mark.parametrize(
    "mutate",
    [
        lambda c: c.update({"typo": 1}),
        lambda c: c["domain"].update({"nodes": "many"}),
        lambda c: c["domain"].pop("radius"),
        lambda c: c["fields"].pop("boundary"),
        lambda c: c["fields"].update({"extra": {"kind": "abs2"}}),
        lambda c: c["flow"].update({"cfl_safety": True}),
        lambda c: c["flow"].update({"unknown_option": 1.0}),
        lambda c: c.update({"source": {"a": 0.5}}),
        lambda c: c.update({"source": {"a": 0.0, "q": 1.0}}),
    ],
)
def test_config_rejections_exit_2(tmp_path, mutate):
    payload = flow_config()
    mutate(payload)
    cfg = write_config(tmp_path, payload)
    assert main(["flow", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


def test_parse_config_round_trip_values():
    payload = flow_config(horizon=2.5, max_steps=1000)
    cfg = parse_config(payload, "flow")
    assert cfg.mode == "flow"
    assert cfg.domain.nodes == 33
    assert cfg.options["horizon"] == 2.5
    assert cfg.options["max_steps"] == 1000
    assert cfg.fields["boundary"].kind == "abs2"


def test_parse_config_rejects_bool_as_number():
    payload = flow_config()
    payload["flow"]["steady_tol"] = True
    with pytest.raises(ConfigError):
        parse_config(payload, "flow")


def test_missing_config_file(tmp_path):
    assert main(["flow", "--config", str(tmp_path / "nope.json"), "--out",
                 str(tmp_path / "x")]) == 2


def test_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["flow", "--config", str(path), "--out", str(tmp_path / "x")]) == 2


def test_tabulated_field_missing_file(tmp_path):
    payload = flow_config()
    payload["fields"]["reference"] = {"kind": "tabulated", "path": str(tmp_path / "no.snap")}
    cfg = write_config(tmp_path, payload)
    assert main(["flow", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


def test_oversized_seed_rejected(tmp_path):
    cfg = write_config(tmp_path, flow_config())
    assert main(["flow", "--config", cfg, "--out", str(tmp_path / "x"),
                 "--seed", str(2**64)]) == 2


def test_bad_mode_exits_via_argparse(tmp_path):
    cfg = write_config(tmp_path, flow_config())
    with pytest.raises(SystemExit) as exc:
        main(["melt", "--config", cfg])
    assert exc.value.code == 2
