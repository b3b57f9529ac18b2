"""Discrete-time system models: x(t+1) = f(x(t), u(t)) with f(0,0) = 0.

Models are restricted to compact state/input boxes because every downstream
computation (reachable layers, feedback synthesis, certification) quantifies
over them. Dynamics callables are written in broadcasting style so a single
closure serves both point evaluation and batched sweeps.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import dsl
from .errors import (DeadbeatError, DimensionMismatch, EquilibriumViolation,
                     NonFiniteResult)

EQUILIBRIUM_TOL = 1e-12


def _as_box(box, dim, what) -> np.ndarray:
    arr = np.asarray(box, dtype=np.float64)
    if arr.shape != (dim, 2):
        raise DimensionMismatch(f"{what} must have shape ({dim}, 2), got {arr.shape}")
    if np.any(arr[:, 0] >= arr[:, 1]):
        raise DeadbeatError(f"{what} has empty or inverted intervals")
    if np.any(arr[:, 0] >= 0.0) or np.any(arr[:, 1] <= 0.0):
        raise DeadbeatError(f"{what} must contain the origin in its interior")
    return arr


@dataclass(frozen=True, eq=False)
class SystemModel:
    """A named discrete-time system on compact boxes.

    f maps (..., n) states and (..., m) inputs to (..., n) states. fx/fu, when
    present, return the state/input Jacobian at a single point.
    """

    name: str
    n: int
    m: int
    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    state_box: np.ndarray
    input_box: np.ndarray
    fx: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    fu: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    expressions: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise DeadbeatError("state and input dimensions must be positive")
        object.__setattr__(self, "state_box", _as_box(self.state_box, self.n, "state_box"))
        object.__setattr__(self, "input_box", _as_box(self.input_box, self.m, "input_box"))
        origin = self.evaluate(np.zeros(self.n), np.zeros(self.m))
        if np.linalg.norm(origin) > EQUILIBRIUM_TOL:
            raise EquilibriumViolation(
                f"{self.name}: f(0,0) = {origin} is not the origin (norm "
                f"{np.linalg.norm(origin):.3e} > {EQUILIBRIUM_TOL})")

    def evaluate(self, x, u) -> np.ndarray:
        """One step of the dynamics at a single point."""
        x = np.asarray(x, dtype=np.float64)
        u = np.asarray(u, dtype=np.float64)
        if x.shape != (self.n,):
            raise DimensionMismatch(f"state must have shape ({self.n},), got {x.shape}")
        if u.shape != (self.m,):
            raise DimensionMismatch(f"input must have shape ({self.m},), got {u.shape}")
        with np.errstate(all="ignore"):
            y = np.asarray(self.f(x, u), dtype=np.float64)
        if y.shape != (self.n,):
            raise DimensionMismatch(f"dynamics returned shape {y.shape}, expected ({self.n},)")
        if not np.all(np.isfinite(y)):
            raise NonFiniteResult(f"{self.name}: f({x}, {u}) = {y}")
        return y

    def evaluate_batch(self, xs, us) -> np.ndarray:
        """Row-wise dynamics; us may be a single input shared by every row."""
        xs = np.asarray(xs, dtype=np.float64)
        us = np.asarray(us, dtype=np.float64)
        if xs.ndim != 2 or xs.shape[1] != self.n:
            raise DimensionMismatch(f"states must have shape (k, {self.n}), got {xs.shape}")
        if us.shape == (self.m,):
            us = np.broadcast_to(us, (xs.shape[0], self.m))
        if us.shape != (xs.shape[0], self.m):
            raise DimensionMismatch(f"inputs must have shape ({xs.shape[0]}, {self.m}), "
                                    f"got {us.shape}")
        with np.errstate(all="ignore"):
            ys = np.asarray(self.f(xs, us), dtype=np.float64)
        if ys.shape != xs.shape:
            raise DimensionMismatch(f"dynamics returned shape {ys.shape}, expected {xs.shape}")
        bad = np.flatnonzero(~np.all(np.isfinite(ys), axis=1))
        if bad.size:
            err = NonFiniteResult(f"{self.name}: non-finite dynamics output at batch row "
                                  f"{bad[0]} (x={xs[bad[0]]}, u={us[bad[0]]})")
            err.row = int(bad[0])
            raise err
        return ys

    def flow(self, x0, inputs) -> "Trajectory":
        """Roll the dynamics forward through a finite input sequence."""
        x0 = np.asarray(x0, dtype=np.float64)
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.size == 0:
            inputs = inputs.reshape(0, self.m)
        if inputs.ndim != 2 or inputs.shape[1] != self.m:
            raise DimensionMismatch(f"inputs must have shape (T, {self.m}), got {inputs.shape}")
        states = np.empty((inputs.shape[0] + 1, self.n))
        states[0] = x0
        for t in range(inputs.shape[0]):
            try:
                states[t + 1] = self.evaluate(states[t], inputs[t])
            except NonFiniteResult as err:
                raise NonFiniteResult(f"at step {t}: {err}") from err
        return Trajectory(states=states, inputs=inputs)

    def contains_state(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self.state_box[:, 0]) and np.all(x <= self.state_box[:, 1]))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States and the inputs that produced them; time starts at 0."""

    states: np.ndarray  # (T+1, n)
    inputs: np.ndarray  # (T, m)
    initial_time: int = 0

    def __post_init__(self):
        if self.states.shape[0] != self.inputs.shape[0] + 1:
            raise DimensionMismatch("a trajectory has exactly one more state than inputs")

    def __len__(self) -> int:
        return self.inputs.shape[0]


def _linear_system(name, A, B, state_box, input_box, expressions) -> SystemModel:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    return SystemModel(
        name=name,
        n=A.shape[0],
        m=B.shape[1],
        f=lambda x, u: x @ A.T + u @ B.T,
        state_box=state_box,
        input_box=input_box,
        fx=lambda x, u: A,
        fu=lambda x, u: B,
        expressions=expressions,
    )


def linear_system(name, A, B, state_box, input_box) -> SystemModel:
    """Build x+ = Ax + Bu with analytic Jacobians (used heavily in tests)."""
    return _linear_system(name, A, B, state_box, input_box, expressions=None)


def _build_registry() -> dict[str, SystemModel]:
    registry = {}

    registry["scalar-integrator"] = _linear_system(
        "scalar-integrator", [[1.0]], [[1.0]],
        state_box=[[-1.0, 1.0]], input_box=[[-1.0, 1.0]],
        expressions=("x1 + u1",))

    # Input half-width 1.95: with 41 quantized inputs the (+,+)/(-,-) corner
    # cells of the 41x41 state grid keep an in-box transition, which a [-2,2]
    # input box misses (the feasible window there contains no multiple of 0.1).
    registry["double-integrator"] = _linear_system(
        "double-integrator", [[1.0, 1.0], [0.0, 1.0]], [[0.5], [1.0]],
        state_box=[[-1.0, 1.0], [-1.0, 1.0]], input_box=[[-1.95, 1.95]],
        expressions=("x1 + x2 + 0.5*u1", "x2 + u1"))

    registry["cubic-contraction"] = SystemModel(
        name="cubic-contraction", n=1, m=1,
        f=lambda x, u: x / 2.0 + u ** 3,
        state_box=[[-1.0, 1.0]], input_box=[[-1.0, 1.0]],
        fx=lambda x, u: np.array([[0.5]]),
        fu=lambda x, u: np.array([[3.0 * float(u[0]) ** 2]]),
        expressions=("x1/2 + u1^3",))

    # Uncontrollable witness: f >= x^2, so |x| > 1 diverges and the origin is
    # unreachable from there; the state box extends past 1 on purpose.
    registry["square-sum"] = SystemModel(
        name="square-sum", n=1, m=1,
        f=lambda x, u: x ** 2 + u ** 2,
        state_box=[[-2.0, 2.0]], input_box=[[-1.0, 1.0]],
        fx=lambda x, u: np.array([[2.0 * float(x[0])]]),
        fu=lambda x, u: np.array([[2.0 * float(u[0])]]),
        expressions=("x1^2 + u1^2",))

    return registry


REGISTRY = _build_registry()


def get_system(name: str) -> SystemModel:
    try:
        return REGISTRY[name]
    except KeyError:
        raise DeadbeatError(f"unknown system {name!r} (available: "
                            f"{', '.join(sorted(REGISTRY))})") from None


def system_from_definition(defn: dict) -> SystemModel:
    """Build a model from a parsed definition (see the JSON file schema)."""
    for key in ("name", "n", "m", "f", "state_box", "input_box"):
        if key not in defn:
            raise DeadbeatError(f"system definition is missing {key!r}")
    n, m = int(defn["n"]), int(defn["m"])
    exprs = defn["f"]
    if not isinstance(exprs, (list, tuple)) or len(exprs) != n:
        raise DeadbeatError(f"'f' must list exactly {n} expression(s)")
    asts = [dsl.parse_expression(str(s), n, m) for s in exprs]

    def f(x, u, _asts=tuple(asts)):
        return np.stack([dsl.evaluate(a, x, u) for a in _asts], axis=-1)

    return SystemModel(
        name=str(defn["name"]), n=n, m=m, f=f,
        state_box=defn["state_box"], input_box=defn["input_box"],
        expressions=tuple(str(s) for s in exprs))


def load_system_file(path: str) -> SystemModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            defn = json.load(fh)
        except json.JSONDecodeError as err:
            raise DeadbeatError(f"invalid JSON in {path}: {err}") from err
    return system_from_definition(defn)


def resolve_system(source: str) -> SystemModel:
    """Interpret a CLI-style system source: registry name or definition file path."""
    if source in REGISTRY:
        return REGISTRY[source]
    if os.path.exists(source):
        return load_system_file(source)
    raise DeadbeatError(f"system {source!r} is neither a registry name nor an existing file")
