"""Uniform quantization of boxes: state-space cells and finite input sets.

Cells are half-open [lo, hi) along each dimension with the final cell closed,
so every point of the box belongs to exactly one cell. Flat indices are
C-ordered (first dimension slowest). Membership tests downstream always use
cell centers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidGrid

ZERO_SNAP_REL = 1e-9


@dataclass(frozen=True, eq=False)
class Grid:
    box: np.ndarray            # (d, 2)
    cells_per_dim: np.ndarray  # (d,) positive ints

    def __post_init__(self):
        box = np.asarray(self.box, dtype=np.float64)
        cells = np.asarray(self.cells_per_dim, dtype=np.int64)
        if box.ndim != 2 or box.shape[1] != 2 or cells.shape != (box.shape[0],):
            raise InvalidGrid("box must be (d, 2) with one cell count per dimension")
        if np.any(cells < 1):
            raise InvalidGrid("cell counts must be positive")
        if np.any(box[:, 0] >= box[:, 1]):
            raise InvalidGrid("box intervals must have positive width")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "cells_per_dim", cells)

    @property
    def dim(self) -> int:
        return self.box.shape[0]

    @cached_property
    def widths(self) -> np.ndarray:
        return (self.box[:, 1] - self.box[:, 0]) / self.cells_per_dim

    @cached_property
    def total_cells(self) -> int:
        return int(np.prod(self.cells_per_dim))

    @cached_property
    def _strides(self) -> np.ndarray:
        strides = np.ones(self.dim, dtype=np.int64)
        for k in range(self.dim - 2, -1, -1):
            strides[k] = strides[k + 1] * self.cells_per_dim[k + 1]
        return strides

    def index_of(self, x) -> int | None:
        """Flat index of the cell containing x, or None when x is outside the box."""
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < self.box[:, 0]) or np.any(x > self.box[:, 1]):
            return None
        idx = np.floor((x - self.box[:, 0]) / self.widths).astype(np.int64)
        idx = np.minimum(idx, self.cells_per_dim - 1)  # hi belongs to the last cell
        return int(idx @ self._strides)

    def index_of_batch(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized index_of; outside points map to -1."""
        xs = np.asarray(xs, dtype=np.float64)
        outside = np.any((xs < self.box[:, 0]) | (xs > self.box[:, 1]), axis=1)
        idx = np.floor((xs - self.box[:, 0]) / self.widths).astype(np.int64)
        np.minimum(idx, self.cells_per_dim - 1, out=idx)
        np.maximum(idx, 0, out=idx)
        flat = idx @ self._strides
        flat[outside] = -1
        return flat

    def center_of(self, i: int) -> np.ndarray:
        if not 0 <= i < self.total_cells:
            raise IndexError(f"cell index {i} out of range [0, {self.total_cells})")
        idx = np.array(np.unravel_index(i, self.cells_per_dim))
        return self.box[:, 0] + (idx + 0.5) * self.widths

    @cached_property
    def centers(self) -> np.ndarray:
        """All cell centers as a (total_cells, d) array, in flat-index order."""
        axes = [self.box[k, 0] + (np.arange(self.cells_per_dim[k]) + 0.5) * self.widths[k]
                for k in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True, eq=False)
class InputSet:
    """A uniform input grid; per-dimension counts are odd so u = 0 is a point."""

    box: np.ndarray             # (m, 2)
    points_per_dim: np.ndarray  # (m,) odd ints
    points: np.ndarray          # (P, m)

    @property
    def count(self) -> int:
        return self.points.shape[0]


def build_input_set(box, points_per_dim) -> InputSet:
    box = np.asarray(box, dtype=np.float64)
    counts = np.asarray(points_per_dim, dtype=np.int64)
    if box.ndim != 2 or box.shape[1] != 2 or counts.shape != (box.shape[0],):
        raise InvalidGrid("input box must be (m, 2) with one count per dimension")
    if np.any(counts < 1) or np.any(counts % 2 == 0):
        raise InvalidGrid("input grid sizes must be odd so the origin is a grid point")
    axes = []
    for (lo, hi), q in zip(box, counts):
        vals = np.linspace(lo, hi, int(q))
        j = int(np.argmin(np.abs(vals)))
        if abs(vals[j]) > ZERO_SNAP_REL * (hi - lo):
            raise InvalidGrid(f"input grid on [{lo}, {hi}] with {q} points does not "
                              f"contain u = 0; center the interval on the origin")
        vals[j] = 0.0  # exact equilibrium input, not linspace rounding noise
        axes.append(vals)
    points = np.array([p for p in itertools.product(*axes)], dtype=np.float64)
    return InputSet(box=box, points_per_dim=counts, points=points)
