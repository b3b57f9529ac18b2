"""Deterministic CSV/JSON renderings of computed artifacts.

Every float is printed with 17 significant digits so parsing the text back
reproduces the exact binary value; identical runs therefore produce byte
identical files. All renderers return strings; callers decide where they go.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import DeadbeatError, MetadataMismatch
from .grid import Grid
from .rank import RankReport
from .reach import ReachLayers
from .simulate import BasinReport, ClosedLoopRun
from .synth import FeedbackTable, TableMeta


def fmt(value: float) -> str:
    """Lossless decimal rendering of a finite float."""
    v = float(value)
    if not math.isfinite(v):
        raise DeadbeatError(f"refusing to serialize non-finite value {v}")
    return format(v, ".17g")


def render_json(obj, indent: int = 0) -> str:
    """Minimal JSON writer so floats keep the 17-digit contract."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}"{k}": {render_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        items = [f"{inner}{render_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot render {type(obj)} as JSON")


# ---------------------------------------------------------------- reach layers

def layers_csv(layers: ReachLayers, grid: Grid) -> str:
    cols = ",".join(f"x{k+1}" for k in range(grid.dim))
    lines = [f"cell_index,{cols},i_x"]
    centers = grid.centers
    for c in range(grid.total_cells):
        center = ",".join(fmt(v) for v in centers[c])
        ix = str(int(layers.indices[c])) if layers.indices[c] >= 0 else ""
        lines.append(f"{c},{center},{ix}")
    return "\n".join(lines) + "\n"


def synth_summary(model_name: str, grid: Grid, inputs_per_dim, epsilon: float,
                  layers: ReachLayers, certified_n: int | None,
                  coverage: float) -> dict:
    return {
        "system": model_name,
        "cells_per_dim": [int(v) for v in grid.cells_per_dim],
        "inputs_per_dim": [int(v) for v in inputs_per_dim],
        "epsilon": float(epsilon),
        "total_cells": grid.total_cells,
        "reachable_cells": int(np.sum(layers.indices >= 0)),
        "coverage": float(coverage),
        "certified_n": certified_n,
        "layer_count": layers.layer_count,
        "fixed_point": layers.fixed_point,
        "growth_log": [int(g) for g in layers.growth_log],
    }


# ------------------------------------------------------------- feedback table

_META_KEYS = ("model", "n", "m", "state_box", "input_box", "cells_per_dim",
              "inputs_per_dim", "epsilon")


def feedback_table_csv(table: FeedbackTable) -> str:
    meta = table.meta
    lines = [
        "# deadbeat feedback table",
        f"# model: {meta.model_name}",
        f"# n: {meta.n}",
        f"# m: {meta.m}",
        "# state_box: " + ",".join(fmt(v) for v in meta.state_box.ravel()),
        "# input_box: " + ",".join(fmt(v) for v in meta.input_box.ravel()),
        "# cells_per_dim: " + ",".join(str(int(v)) for v in meta.cells_per_dim),
        "# inputs_per_dim: " + ",".join(str(int(v)) for v in meta.inputs_per_dim),
        f"# epsilon: {fmt(meta.epsilon)}",
    ]
    ucols = ",".join(f"u_{k+1}" for k in range(meta.m))
    lines.append(f"cell_index,i_x,{ucols}")
    for c in range(table.indices.size):
        if table.indices[c] < 0:
            lines.append(f"{c}," + "," * meta.m)
        else:
            controls = ",".join(fmt(v) for v in table.controls[c])
            lines.append(f"{c},{int(table.indices[c])},{controls}")
    return "\n".join(lines) + "\n"


def parse_feedback_table_csv(text: str) -> FeedbackTable:
    meta_fields = {}
    rows = []
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, _, value = body.partition(":")
                meta_fields[key.strip()] = value.strip()
            continue
        if not header_seen:
            header_seen = True  # column header carries no data
            continue
        rows.append((lineno, line))
    missing = [k for k in _META_KEYS if k not in meta_fields]
    if missing:
        raise DeadbeatError(f"feedback table is missing metadata: {', '.join(missing)}")

    n = int(meta_fields["n"])
    m = int(meta_fields["m"])
    meta = TableMeta(
        model_name=meta_fields["model"],
        n=n, m=m,
        state_box=np.array([float(v) for v in meta_fields["state_box"].split(",")],
                           dtype=np.float64).reshape(n, 2),
        input_box=np.array([float(v) for v in meta_fields["input_box"].split(",")],
                           dtype=np.float64).reshape(m, 2),
        cells_per_dim=np.array([int(v) for v in meta_fields["cells_per_dim"].split(",")],
                               dtype=np.int64),
        inputs_per_dim=np.array([int(v) for v in meta_fields["inputs_per_dim"].split(",")],
                                dtype=np.int64),
        epsilon=float(meta_fields["epsilon"]),
    )
    total = int(np.prod(meta.cells_per_dim))
    if len(rows) != total:
        raise DeadbeatError(f"feedback table has {len(rows)} rows, expected {total}")
    indices = np.full(total, -1, dtype=np.int64)
    controls = np.full((total, m), np.nan)
    for lineno, line in rows:
        parts = line.split(",")
        if len(parts) != 2 + m:
            raise DeadbeatError(f"line {lineno}: expected {2 + m} fields, got {len(parts)}")
        c = int(parts[0])
        if parts[1]:
            indices[c] = int(parts[1])
            controls[c] = [float(v) for v in parts[2:]]
    return FeedbackTable(indices=indices, controls=controls, meta=meta)


def require_matching_meta(table: FeedbackTable, expected: TableMeta) -> None:
    if not table.meta.matches(expected):
        raise MetadataMismatch(
            "feedback table metadata does not match the requested configuration "
            f"(table: {table.meta.model_name} cells "
            f"{table.meta.cells_per_dim.tolist()} inputs "
            f"{table.meta.inputs_per_dim.tolist()} epsilon {table.meta.epsilon}; "
            f"requested: {expected.model_name} cells {expected.cells_per_dim.tolist()} "
            f"inputs {expected.inputs_per_dim.tolist()} epsilon {expected.epsilon})")


# ----------------------------------------------------------------- simulation

def trajectory_csv(run: ClosedLoopRun, n: int, m: int) -> str:
    xcols = ",".join(f"x_{k+1}" for k in range(n))
    ucols = ",".join(f"u_{k+1}" for k in range(m))
    lines = [f"t,{xcols},{ucols},i_x"]
    states = run.trajectory.states
    inputs = run.trajectory.inputs
    for t in range(states.shape[0]):
        xs = ",".join(fmt(v) for v in states[t])
        us = (",".join(fmt(v) for v in inputs[t]) if t < inputs.shape[0]
              else "," * (m - 1))
        trace = run.index_trace[t] if t < len(run.index_trace) else None
        lines.append(f"{t},{xs},{us},{'' if trace is None else int(trace)}")
    return "\n".join(lines) + "\n"


def basin_report_csv(report: BasinReport) -> str:
    lines = ["cell_index,outcome,steps,i_x"]
    for c, o, s, i in zip(report.cell_ids, report.outcomes, report.steps,
                          report.layer_indices):
        ix = str(int(i)) if i >= 0 else ""
        lines.append(f"{int(c)},{o.value},{int(s)},{ix}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------- rank

def rank_report_json(report: RankReport, seed: int) -> str:
    payload = {
        "horizon": report.horizon,
        "tau": report.tau,
        "neighborhood_radius": report.neighborhood_radius,
        "seed": seed,
        "rank_at_origin": report.rank,
        "singular_values_at_origin": [float(s) for s in report.singular_values],
        "jacobian_at_origin": [[float(v) for v in row] for row in report.jacobian],
        "samples": [
            {
                "x": [float(v) for v in s.x],
                "u_stack": [float(v) for v in s.u_stack],
                "singular_values": [float(v) for v in s.singular_values],
                "rank": s.rank,
            }
            for s in report.samples
        ],
        "holds_on_neighborhood": report.holds_on_neighborhood,
    }
    return render_json(payload) + "\n"


def steering_csv(u_stack: np.ndarray, m: int) -> str:
    ucols = ",".join(f"u_{k+1}" for k in range(m))
    lines = [f"t,{ucols}"]
    seq = np.asarray(u_stack, dtype=np.float64).reshape(-1, m)
    for t in range(seq.shape[0]):
        lines.append(f"{t}," + ",".join(fmt(v) for v in seq[t]))
    return "\n".join(lines) + "\n"
