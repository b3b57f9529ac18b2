"""Backward reachable layers over the state grid.

Layer 0 is the set of cells whose centers lie in the closed epsilon-ball
around the origin (the practical stand-in for an exact-origin target). Layer
k adds every cell from which some quantized input sends the cell center into
an already-layered cell or straight into the ball. The per-cell minimal layer
index doubles as the certified steps-to-target.

Sweeps are synchronous (Jacobi): each sweep tests unassigned cells against
the assignment of the previous sweep only, so chunked/parallel evaluation is
bitwise identical to the sequential result.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteResult
from .grid import Grid, InputSet
from .systems import SystemModel

DEFAULT_TABLE_BUDGET = 256 * 2 ** 20  # bytes; transition table is preferred when it fits


def default_max_layers(grid: Grid) -> int:
    return 10 * int(grid.cells_per_dim.max())


@dataclass(frozen=True, eq=False)
class ReachLayers:
    """Per-cell minimal layer index (-1 = unreachable) plus iteration telemetry."""

    indices: np.ndarray      # (total_cells,) int64
    target_radius: float
    growth_log: tuple[int, ...]  # newly layered cells per sweep, layer 0 first
    fixed_point: bool        # True when the last sweep added nothing

    @property
    def layer_count(self) -> int:
        return int(self.indices.max()) + 1 if np.any(self.indices >= 0) else 0


def _tag_nonfinite(err: NonFiniteResult, cell_ids: np.ndarray, input_index: int,
                   grid: Grid, inputs: InputSet) -> NonFiniteResult:
    cell = int(cell_ids[err.row]) if hasattr(err, "row") else -1
    out = NonFiniteResult(f"evaluating cell {cell} (center "
                          f"{grid.center_of(cell) if cell >= 0 else '?'}) with input "
                          f"{inputs.points[input_index]}: {err}")
    out.cell = cell
    out.input_index = input_index
    return out


def compute_transitions(model: SystemModel, grid: Grid, inputs: InputSet,
                        epsilon: float, threads: int = 1,
                        cell_ids: np.ndarray | None = None):
    """Successor cells and ball hits for every (cell, input) pair.

    Returns (successors, ball_hits): (k, P) int64 with -1 for outside, and a
    (k, P) bool mask of transitions landing inside the target ball.
    """
    if cell_ids is None:
        centers = grid.centers
        cell_ids = np.arange(grid.total_cells)
    else:
        centers = grid.centers[cell_ids]
    P = inputs.count
    succ = np.empty((centers.shape[0], P), dtype=np.int64)
    ball = np.empty((centers.shape[0], P), dtype=bool)

    def fill(p: int) -> None:
        try:
            ys = model.evaluate_batch(centers, inputs.points[p])
        except NonFiniteResult as err:
            raise _tag_nonfinite(err, cell_ids, p, grid, inputs) from err
        ball[:, p] = np.linalg.norm(ys, axis=1) <= epsilon
        succ[:, p] = grid.index_of_batch(ys)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(P)))  # columns are disjoint; order-independent
    else:
        for p in range(P):
            fill(p)
    return succ, ball


def compute_layers(model: SystemModel, grid: Grid, inputs: InputSet, epsilon: float,
                   max_layers: int | None = None, threads: int = 1,
                   table_budget_bytes: int = DEFAULT_TABLE_BUDGET) -> ReachLayers:
    """Run the layer induction to a fixed point or the layer cap."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if max_layers is None:
        max_layers = default_max_layers(grid)
    if max_layers < 1:
        raise ValueError("max_layers must be at least 1")
    threads = max(1, int(threads))

    indices = np.full(grid.total_cells, -1, dtype=np.int64)
    in_ball = np.linalg.norm(grid.centers, axis=1) <= epsilon
    indices[in_ball] = 0
    growth = [int(in_ball.sum())]

    table_bytes = grid.total_cells * inputs.count * 9
    use_table = table_bytes <= table_budget_bytes
    if use_table:
        succ, ball = compute_transitions(model, grid, inputs, epsilon, threads=threads)
        valid = succ >= 0
        safe_succ = np.where(valid, succ, 0)

    fixed_point = False
    for layer in range(1, max_layers + 1):
        reached_prev = indices >= 0
        if use_table:
            succ_reached = valid & reached_prev[safe_succ]
            newly = ~reached_prev & np.any(ball | succ_reached, axis=1)
            new_cells = np.flatnonzero(newly)
        else:
            new_cells = _frontier_sweep(model, grid, inputs, epsilon,
                                        reached_prev, threads)
        growth.append(int(new_cells.size))
        if new_cells.size == 0:
            fixed_point = True
            break
        indices[new_cells] = layer

    return ReachLayers(indices=indices, target_radius=float(epsilon),
                       growth_log=tuple(growth), fixed_point=fixed_point)


def _frontier_sweep(model, grid, inputs, epsilon, reached_prev, threads) -> np.ndarray:
    """One Jacobi sweep evaluating transitions for unassigned cells only."""
    remaining = np.flatnonzero(~reached_prev)
    if remaining.size == 0:
        return remaining

    def sweep_chunk(chunk: np.ndarray) -> np.ndarray:
        succ, ball = compute_transitions(model, grid, inputs, epsilon,
                                         threads=1, cell_ids=chunk)
        ok = ball | ((succ >= 0) & reached_prev[np.where(succ >= 0, succ, 0)])
        return chunk[np.any(ok, axis=1)]

    if threads > 1 and remaining.size > 1:
        chunks = np.array_split(remaining, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(sweep_chunk, [c for c in chunks if c.size]))
        return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    return sweep_chunk(remaining)


def coverage(layers: ReachLayers) -> float:
    """Fraction of cells with a finite layer index."""
    return float(np.mean(layers.indices >= 0))


def certify_n_step(layers: ReachLayers) -> int | None:
    """Smallest k with every cell in layer <= k, or None when coverage < 1."""
    if np.any(layers.indices < 0):
        return None
    return int(layers.indices.max())
