"""Snapshot and trace round trips must be bit exact and deterministic."""

import numpy as np
import pytest

from maflow import (
    DomainSpec,
    FieldSpec,
    GridField,
    build_grid,
    read_snapshot,
    read_trace,
    write_snapshot,
    write_trace,
)
from maflow.flow import TraceRow
from maflow.snapshots import TRACE_COLUMNS

HEADER = "t,F,F0,I,J,Y,det_min,det_max,sup_udot,sup_grad,sup_hess,sup_err_vs_ref"


def sample_row(**kw):
    vals = dict(t=0.5, F=1.0, F0=0.75, I=1.5, J=0.7, Y=1e-12, det_min=0.9,
                det_max=2.1, sup_udot=3e-9, sup_grad=2.0, sup_hess=2.0,
                sup_err_vs_ref=1e-6)
    vals.update(kw)
    return TraceRow(**vals)


@pytest.mark.parametrize("fix", ["disc65", "square17", "cube9"])
def test_snapshot_round_trip_bit_exact(fix, request, rng, tmp_path):
    g = request.getfixturevalue(fix)
    vals = rng.standard_normal(g.num_nodes)
    vals[0] = -0.0  # signed zero must survive
    field = GridField(g, vals)
    path = tmp_path / "field.snap"
    write_snapshot(field, path, name="probe")
    back, name = read_snapshot(path, grid=g)
    assert name == "probe"
    assert back.grid is g
    assert back.values.tobytes() == field.values.tobytes()


def test_snapshot_rebuilds_grid(tmp_path):
    g = build_grid(DomainSpec.box(2, [(-1.0, 1.0)] * 4, 0.5))
    field = GridField(g, np.arange(g.num_nodes, dtype=float))
    path = tmp_path / "f.snap"
    write_snapshot(field, path)
    back, name = read_snapshot(path)
    assert name == "u"
    assert back.grid.spec == g.spec
    np.testing.assert_array_equal(back.values, field.values)


def test_snapshot_grid_mismatch(tmp_path, disc65, disc33):
    path = tmp_path / "f.snap"
    write_snapshot(disc65.constant_field(1.0), path)
    with pytest.raises(ValueError, match="geometry"):
        read_snapshot(path, grid=disc33)


def test_tabulated_field_spec_reads_snapshot(tmp_path, disc65):
    path = tmp_path / "g.snap"
    write_snapshot(GridField(disc65, np.exp(-disc65.r**2)), path, name="g")
    spec = FieldSpec.tabulated(path)
    field = spec.evaluate(disc65)
    np.testing.assert_array_equal(field.values, np.exp(-disc65.r**2))


def test_empty_trace_is_header_only(tmp_path):
    path = tmp_path / "trace.csv"
    write_trace([], path)
    text = path.read_text()
    assert text == HEADER + "\n"
    assert read_trace(path) == []


def test_trace_header_matches_columns():
    assert ",".join(TRACE_COLUMNS) == HEADER


def test_trace_round_trip_exact(tmp_path):
    rows = [sample_row(), sample_row(t=1.0 / 3.0, F=np.pi, sup_err_vs_ref=None)]
    path = tmp_path / "trace.csv"
    write_trace(rows, path)
    back = read_trace(path)
    assert len(back) == 2
    # 17 significant digits reproduce float64 exactly
    assert back[0]["F"] == 1.0
    assert back[1]["t"] == 1.0 / 3.0
    assert back[1]["F"] == np.pi
    assert np.isnan(back[1]["sup_err_vs_ref"])


def test_trace_bytes_deterministic(tmp_path):
    rows = [sample_row(t=t) for t in np.linspace(0.0, 1.0, 7)]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_trace(rows, p1)
    write_trace(rows, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_trace_rejects_foreign_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,F\n0,1\n")
    with pytest.raises(ValueError, match="header"):
        read_trace(path)
