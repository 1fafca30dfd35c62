"""Self-describing field snapshots and the flow trace CSV.

A snapshot is one JSON header line (n, shape, extents, h, field name, node
count) followed by the node values as little-endian float64 in row-major node
order.  Round trips are bit exact.  Trace files are CSV with a fixed column
set, every value printed with 17 significant digits.
"""

from __future__ import annotations

import json

import numpy as np

from .grid import DomainSpec, Grid, GridField, build_grid

TRACE_COLUMNS = (
    "t",
    "F",
    "F0",
    "I",
    "J",
    "Y",
    "det_min",
    "det_max",
    "sup_udot",
    "sup_grad",
    "sup_hess",
    "sup_err_vs_ref",
)


def _header_for(g: Grid, name: str) -> dict:
    if g.kind == "radial":
        extents = [[0.0, g.spec.radius]]
        h = [g.h]
    else:
        extents = [list(e) for e in g.spec.extents]
        h = list(g.spec.spacings)
    return {
        "extents": extents,
        "field": name,
        "h": h,
        "n": g.n,
        "nodes": g.num_nodes,
        "shape": g.kind,
    }


def write_snapshot(field: GridField, path, name: str = "u") -> None:
    header = json.dumps(_header_for(field.grid, name), sort_keys=True)
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii") + b"\n")
        fh.write(payload)


def _spec_from_header(header: dict) -> DomainSpec:
    if header["shape"] == "radial":
        return DomainSpec.radial(header["n"], header["extents"][0][1], header["nodes"])
    return DomainSpec.box(header["n"], header["extents"], header["h"])


def read_snapshot(path, grid: Grid | None = None):
    """Read a snapshot; returns (GridField, field name).

    When ``grid`` is given the stored geometry must match it exactly;
    otherwise the grid is rebuilt from the header.
    """
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    header = json.loads(header_line.decode("ascii"))
    values = np.frombuffer(payload, dtype="<f8")
    if values.size != header["nodes"]:
        raise ValueError(
            f"snapshot payload holds {values.size} values, header says {header['nodes']}"
        )
    spec = _spec_from_header(header)
    if grid is None:
        grid = build_grid(spec)
    elif grid.spec != spec:
        raise ValueError(f"snapshot geometry {spec} does not match the target grid")
    return GridField(grid, values.astype(float)), header["field"]


def _fmt(value) -> str:
    if value is None:
        return "nan"
    return "%.17g" % float(value)


def write_trace(rows, path) -> None:
    lines = [",".join(TRACE_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(getattr(row, col)) for col in TRACE_COLUMNS))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace(path):
    """Parse a trace CSV back into a list of per-column float dicts."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        rows = []
        for line in fh:
            if not line.strip():
                continue
            rows.append(dict(zip(TRACE_COLUMNS, (float(v) for v in line.split(",")))))
    return rows
