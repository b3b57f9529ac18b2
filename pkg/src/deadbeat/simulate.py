"""Closed-loop execution of a synthesized feedback table.

Runs come in two semantics. `quantize=True` replays the exact semantics used
during synthesis (the state snaps to its cell center before each lookup), so
the layer index provably drops by one per step and convergence takes exactly
the starting cell's index. `quantize=False` runs the true closed loop from an
arbitrary point; its behavior off cell centers is measured, not certified.
Certification sweeps therefore run quantized; the CLI simulate command runs
true dynamics by default.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grid import Grid
from .synth import OUTSIDE, UNREACHABLE, FeedbackTable, lookup
from .systems import SystemModel, Trajectory


class Outcome(str, Enum):
    CONVERGED = "Converged"
    LEFT_BOX = "LeftBox"
    HIT_UNREACHABLE = "HitUnreachable"
    STALLED = "Stalled"


@dataclass(frozen=True, eq=False)
class ClosedLoopRun:
    trajectory: Trajectory
    index_trace: tuple  # layer index per visited state; None outside/unreachable
    outcome: Outcome
    steps: int  # steps taken until convergence, or the step of the terminal event

    @property
    def converged(self) -> bool:
        return self.outcome is Outcome.CONVERGED


def default_max_steps(table: FeedbackTable) -> int:
    # any certified run needs at most layer_count steps; slack catches bugs
    return table.layer_count + 5


def run_closed_loop(model: SystemModel, table: FeedbackTable, grid: Grid, x0,
                    epsilon: float, max_steps: int | None = None,
                    quantize: bool = False) -> ClosedLoopRun:
    if max_steps is None:
        max_steps = default_max_steps(table)
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    x = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    states = []
    applied = []
    trace = []
    t = 0
    while True:
        if quantize:
            j = grid.index_of(x)
            if j is not None:
                x = grid.center_of(j)
        states.append(x)
        if float(np.linalg.norm(x)) <= epsilon:
            trace.append(0)
            outcome, step = Outcome.CONVERGED, t
            break
        u = lookup(table, grid, x)
        if u is OUTSIDE:
            trace.append(None)
            outcome, step = Outcome.LEFT_BOX, t
            break
        if u is UNREACHABLE:
            trace.append(None)
            outcome, step = Outcome.HIT_UNREACHABLE, t
            break
        trace.append(int(table.indices[grid.index_of(x)]))
        if t == max_steps:
            outcome, step = Outcome.STALLED, t
            break
        applied.append(u)
        x = model.evaluate(x, u)
        t += 1
    trajectory = Trajectory(states=np.array(states),
                            inputs=np.array(applied).reshape(len(applied), model.m))
    return ClosedLoopRun(trajectory=trajectory, index_trace=tuple(trace),
                         outcome=outcome, steps=step)


@dataclass(frozen=True, eq=False)
class BasinReport:
    """Quantized-semantics sweep over every cell center.

    Unreachable cells appear too: their runs report HitUnreachable at step 0,
    so the converged fraction equals the reach coverage exactly when every
    certified cell honors its certificate.
    """

    cell_ids: np.ndarray
    layer_indices: np.ndarray  # i_x per swept cell, -1 where unreachable
    outcomes: tuple
    steps: np.ndarray
    epsilon: float

    @property
    def total(self) -> int:
        return self.cell_ids.size

    @property
    def finite_total(self) -> int:
        return int(np.sum(self.layer_indices >= 0))

    @property
    def converged_count(self) -> int:
        return sum(1 for o in self.outcomes if o is Outcome.CONVERGED)

    @property
    def converged_fraction(self) -> float:
        return self.converged_count / self.total if self.total else 0.0

    @property
    def empirical_n(self) -> int | None:
        steps = [int(s) for s, o in zip(self.steps, self.outcomes)
                 if o is Outcome.CONVERGED]
        return max(steps) if steps else None

    @property
    def violations(self) -> list[int]:
        """Certified cells that failed to converge or overshot their step budget."""
        bad = []
        for c, i, o, s in zip(self.cell_ids, self.layer_indices, self.outcomes, self.steps):
            if i >= 0 and (o is not Outcome.CONVERGED or s > i):
                bad.append(int(c))
        return bad

    @property
    def certified(self) -> bool:
        return self.finite_total > 0 and not self.violations


def certify_basin(model: SystemModel, table: FeedbackTable, grid: Grid,
                  epsilon: float, max_steps: int | None = None,
                  threads: int = 1) -> BasinReport:
    """Run the quantized closed loop from every cell center."""
    cells = np.arange(grid.total_cells)

    def sweep(chunk: np.ndarray):
        results = []
        for c in chunk:
            run = run_closed_loop(model, table, grid, grid.center_of(int(c)),
                                  epsilon, max_steps=max_steps, quantize=True)
            results.append((run.outcome, run.steps))
        return results

    threads = max(1, int(threads))
    if threads > 1 and cells.size > 1:
        chunks = [c for c in np.array_split(cells, threads) if c.size]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = pool.map(sweep, chunks)
        flat = [item for part in parts for item in part]
    else:
        flat = sweep(cells)

    outcomes = tuple(o for o, _ in flat)
    steps = np.array([s for _, s in flat], dtype=np.int64)
    return BasinReport(cell_ids=cells, layer_indices=table.indices.copy(),
                       outcomes=outcomes, steps=steps, epsilon=float(epsilon))
