"""Feedback-table synthesis: one descending input per reachable cell.

The underlying existence argument picks an arbitrary element of the selector
set U_x; here the pick is total-ordered instead: minimal Euclidean norm,
ties broken lexicographically by coordinates. The result is deterministic,
reproducible, and biased toward small control effort. The realized feedback
is piecewise constant on cells, hence generally discontinuous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InternalInconsistency
from .grid import Grid, InputSet
from .reach import ReachLayers, compute_transitions
from .systems import SystemModel


class _Sentinel:
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name


OUTSIDE = _Sentinel("Outside")
UNREACHABLE = _Sentinel("Unreachable")


@dataclass(frozen=True, eq=False)
class TableMeta:
    """Provenance a feedback table carries so consumers can refuse stale files."""

    model_name: str
    n: int
    m: int
    state_box: np.ndarray
    input_box: np.ndarray
    cells_per_dim: np.ndarray
    inputs_per_dim: np.ndarray
    epsilon: float

    @staticmethod
    def from_parts(model: SystemModel, grid: Grid, inputs: InputSet,
                   epsilon: float) -> "TableMeta":
        return TableMeta(model_name=model.name, n=model.n, m=model.m,
                         state_box=grid.box.copy(), input_box=inputs.box.copy(),
                         cells_per_dim=grid.cells_per_dim.copy(),
                         inputs_per_dim=inputs.points_per_dim.copy(),
                         epsilon=float(epsilon))

    def matches(self, other: "TableMeta") -> bool:
        return (self.model_name == other.model_name
                and self.n == other.n and self.m == other.m
                and np.array_equal(self.state_box, other.state_box)
                and np.array_equal(self.input_box, other.input_box)
                and np.array_equal(self.cells_per_dim, other.cells_per_dim)
                and np.array_equal(self.inputs_per_dim, other.inputs_per_dim)
                and self.epsilon == other.epsilon)


@dataclass(frozen=True, eq=False)
class FeedbackTable:
    """Per-cell layer index and selected input; NaN rows mark unreachable cells."""

    indices: np.ndarray   # (total_cells,) int64, -1 where unreachable
    controls: np.ndarray  # (total_cells, m) float64
    meta: TableMeta

    @property
    def layer_count(self) -> int:
        return int(self.indices.max()) + 1 if np.any(self.indices >= 0) else 0


def selection_order(inputs: InputSet) -> np.ndarray:
    """Input indices sorted by (norm, lexicographic coordinates)."""
    pts = inputs.points
    norms = np.sum(pts * pts, axis=1)
    keys = tuple(pts[:, k] for k in range(pts.shape[1] - 1, -1, -1)) + (norms,)
    return np.lexsort(keys)


def synthesize(layers: ReachLayers, model: SystemModel, grid: Grid,
               inputs: InputSet, threads: int = 1) -> FeedbackTable:
    """Select a layer-descending input for every reachable cell."""
    li = layers.indices
    succ, ball = compute_transitions(model, grid, inputs, layers.target_radius,
                                     threads=threads)
    valid = succ >= 0
    succ_layer = np.where(valid, li[np.where(valid, succ, 0)], -1)
    descends = ball | ((succ_layer >= 0) & (succ_layer <= li[:, None] - 1))

    order = selection_order(inputs)
    ordered = descends[:, order]
    first = np.argmax(ordered, axis=1)
    found = ordered[np.arange(grid.total_cells), first]

    needs_input = li > 0
    missing = needs_input & ~found
    if np.any(missing):
        c = int(np.flatnonzero(missing)[0])
        raise InternalInconsistency(
            f"cell {c} has layer index {li[c]} but no descending input; "
            "reach layers and transitions disagree")

    controls = np.full((grid.total_cells, model.m), np.nan)
    controls[li == 0] = 0.0  # equilibrium input keeps the loop defined after arrival
    chosen = inputs.points[order[first]]
    controls[needs_input] = chosen[needs_input]

    return FeedbackTable(indices=li.copy(), controls=controls,
                         meta=TableMeta.from_parts(model, grid, inputs,
                                                   layers.target_radius))


def lookup(table: FeedbackTable, grid: Grid, x):
    """Feedback law realization: the stored input of the cell containing x.

    Returns OUTSIDE beyond the box and UNREACHABLE where synthesis found no
    certificate; both are values, not errors.
    """
    j = grid.index_of(x)
    if j is None:
        return OUTSIDE
    if table.indices[j] < 0:
        return UNREACHABLE
    return table.controls[j].copy()
