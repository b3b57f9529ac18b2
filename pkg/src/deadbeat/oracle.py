"""Brute-force ground truth: explicit transition graph plus reverse BFS.

This is intentionally a different algorithm from the layer computation in
`reach` (graph + queue instead of synchronous sweeps) and is kept as plain
per-cell Python so the two paths share as little code as possible. It is the
master correctness check for the whole pipeline; scalability is a non-goal.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteResult
from .grid import Grid, InputSet
from .systems import SystemModel

OUTSIDE_NODE = -1  # absorbing sink: the certificate is forfeited outside the box
BALL_NODE = -2     # transition landed inside the target ball itself


@dataclass(frozen=True, eq=False)
class TransitionGraph:
    """Quantized transition system: one edge per (cell, input) pair."""

    successors: np.ndarray   # (total_cells, P) ints: cell index, OUTSIDE_NODE or BALL_NODE
    target_cells: np.ndarray  # cells whose centers lie in the closed epsilon-ball
    epsilon: float

    @property
    def num_cells(self) -> int:
        return self.successors.shape[0]

    @property
    def num_inputs(self) -> int:
        return self.successors.shape[1]


def build_graph(model: SystemModel, grid: Grid, inputs: InputSet,
                epsilon: float) -> TransitionGraph:
    succ = np.empty((grid.total_cells, inputs.count), dtype=np.int64)
    for c in range(grid.total_cells):
        xc = grid.center_of(c)
        for p in range(inputs.count):
            try:
                y = model.evaluate(xc, inputs.points[p])
            except NonFiniteResult as err:
                raise NonFiniteResult(
                    f"cell {c} (center {xc}), input {inputs.points[p]}: {err}") from err
            if float(np.linalg.norm(y)) <= epsilon:
                succ[c, p] = BALL_NODE
            else:
                j = grid.index_of(y)
                succ[c, p] = OUTSIDE_NODE if j is None else j
    targets = [c for c in range(grid.total_cells)
               if float(np.linalg.norm(grid.center_of(c))) <= epsilon]
    return TransitionGraph(successors=succ,
                           target_cells=np.array(targets, dtype=np.int64),
                           epsilon=epsilon)


def min_horizons(graph: TransitionGraph) -> np.ndarray:
    """Exact minimal steps-to-target per cell (-1 where unreachable).

    Reverse breadth-first search from the target set; the ball behaves as one
    extra target node that one-step ball hits enter.
    """
    total = graph.num_cells
    ball = total  # internal node id for BALL_NODE
    preds: list[list[int]] = [[] for _ in range(total + 1)]
    for c in range(total):
        for s in graph.successors[c]:
            if s == BALL_NODE:
                preds[ball].append(c)
            elif s != OUTSIDE_NODE:
                preds[s].append(c)
    dist = np.full(total + 1, -1, dtype=np.int64)
    queue: deque[int] = deque()
    dist[ball] = 0
    queue.append(ball)
    for c in graph.target_cells:
        dist[c] = 0
        queue.append(int(c))
    while queue:
        node = queue.popleft()
        for p in preds[node]:
            if dist[p] < 0:
                dist[p] = dist[node] + 1
                queue.append(p)
    return dist[:total]


def shortest_path_inputs(graph: TransitionGraph, horizons: np.ndarray) -> dict[int, int]:
    """For each reachable non-target cell, one input index that starts a shortest path."""
    choice = {}
    for c in range(graph.num_cells):
        k = horizons[c]
        if k <= 0:
            continue
        for p in range(graph.num_inputs):
            s = graph.successors[c, p]
            if s == BALL_NODE or (s >= 0 and 0 <= horizons[s] <= k - 1):
                choice[c] = p
                break
    return choice


def to_dot(graph: TransitionGraph) -> str:
    """DOT rendering of small graphs (unique edges only); documentation aid."""
    lines = ["digraph transitions {"]
    for c in graph.target_cells:
        lines.append(f'  c{c} [shape=doublecircle];')
    lines.append('  ball [label="target ball", shape=doublecircle];')
    lines.append('  outside [label="outside", shape=box];')
    for c in range(graph.num_cells):
        for s in sorted(set(graph.successors[c].tolist())):
            if s == BALL_NODE:
                lines.append(f"  c{c} -> ball;")
            elif s == OUTSIDE_NODE:
                lines.append(f"  c{c} -> outside;")
            else:
                lines.append(f"  c{c} -> c{s};")
    lines.append("}")
    return "\n".join(lines)
