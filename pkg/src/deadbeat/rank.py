"""Controllability-rank numerics for the N-step flow map.

The flow map is treated as a function of the stacked input sequence
(u(0); u(1); ...; u(N-1)). Its Jacobian is assembled by chain rule when the
model carries analytic Jacobians and by central finite differences otherwise.
Rank is decided by SVD with a relative cutoff. Local steering to the origin
is a minimal-norm Gauss-Newton iteration on the flow residual - equivalent,
at full rank, to the implicit-function construction that backs the local
reachability argument, without committing to a particular variable split.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import NoConvergence, NonFiniteJacobian, SingularStep
from .systems import SystemModel

DEFAULT_RANK_TOL = 1e-8
FD_STEP = float(np.finfo(np.float64).eps) ** (1.0 / 3.0)
ARMIJO_C = 1e-4


def stacked_flow(model: SystemModel, x0, u_stack, horizon: int) -> np.ndarray:
    """State after `horizon` steps driven by a stacked input vector."""
    x0 = np.asarray(x0, dtype=np.float64)
    u = np.asarray(u_stack, dtype=np.float64).reshape(horizon, model.m)
    x = x0
    for t in range(horizon):
        x = model.evaluate(x, u[t])
    return x


def stacked_flow_batch(model: SystemModel, x0, u_stacks: np.ndarray,
                       horizon: int) -> np.ndarray:
    """stacked_flow for many input stacks sharing one initial state."""
    u_stacks = np.asarray(u_stacks, dtype=np.float64)
    batch = u_stacks.shape[0]
    xs = np.broadcast_to(np.asarray(x0, dtype=np.float64), (batch, model.n)).copy()
    for t in range(horizon):
        xs = model.evaluate_batch(xs, u_stacks[:, t * model.m:(t + 1) * model.m])
    return xs


def input_jacobian(model: SystemModel, x, u_stack, horizon: int) -> np.ndarray:
    """d(flow)/d(stacked inputs): an n x (horizon*m) matrix, u(0) block first."""
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u_stack, dtype=np.float64)
    if u.shape != (horizon * model.m,):
        u = u.reshape(horizon * model.m)
    if model.fx is not None and model.fu is not None:
        jac = _chain_rule_jacobian(model, x, u, horizon)
    else:
        jac = _finite_difference_jacobian(model, x, u, horizon)
    if not np.all(np.isfinite(jac)):
        raise NonFiniteJacobian(f"{model.name}: non-finite flow-map Jacobian at x={x}")
    return jac


def _chain_rule_jacobian(model, x, u, horizon):
    us = u.reshape(horizon, model.m)
    states = [x]
    for t in range(horizon):
        states.append(model.evaluate(states[-1], us[t]))
    blocks = [None] * horizon
    acc = np.eye(model.n)
    for t in range(horizon - 1, -1, -1):
        blocks[t] = acc @ np.asarray(model.fu(states[t], us[t]), dtype=np.float64)
        acc = acc @ np.asarray(model.fx(states[t], us[t]), dtype=np.float64)
    return np.hstack(blocks)


def _finite_difference_jacobian(model, x, u, horizon):
    dim = u.size
    h = FD_STEP * np.maximum(1.0, np.abs(u))
    plus = np.tile(u, (dim, 1))
    minus = np.tile(u, (dim, 1))
    plus[np.arange(dim), np.arange(dim)] += h
    minus[np.arange(dim), np.arange(dim)] -= h
    f_plus = stacked_flow_batch(model, x, plus, horizon)
    f_minus = stacked_flow_batch(model, x, minus, horizon)
    return ((f_plus - f_minus) / (2.0 * h[:, None])).T


def svd_rank(matrix: np.ndarray, tau: float = DEFAULT_RANK_TOL):
    """(rank, singular values) under a relative cutoff; rank 0 for a zero matrix."""
    sigma = np.linalg.svd(np.asarray(matrix, dtype=np.float64), compute_uv=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0, sigma
    return int(np.sum(sigma > tau * sigma[0])), sigma


@dataclass(frozen=True, eq=False)
class RankSample:
    x: np.ndarray
    u_stack: np.ndarray
    singular_values: np.ndarray
    rank: int


@dataclass(frozen=True, eq=False)
class RankReport:
    horizon: int
    tau: float
    neighborhood_radius: float
    jacobian: np.ndarray            # at the origin
    singular_values: np.ndarray     # at the origin, nonincreasing
    rank: int                       # at the origin
    samples: tuple
    holds_on_neighborhood: bool


def check_rank_condition(model: SystemModel, horizon: int,
                         neighborhood_radius: float = 0.1, samples: int = 16,
                         tau: float = DEFAULT_RANK_TOL, seed: int = 0) -> RankReport:
    """Evaluate the rank of the input Jacobian at the origin and nearby.

    Sampling evidence cannot decide the topological 'open neighborhood'
    statement; the verdict is the sampled surrogate and nothing more.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if neighborhood_radius <= 0:
        raise ValueError("neighborhood_radius must be positive")
    dim = model.n + horizon * model.m
    origin_jac = input_jacobian(model, np.zeros(model.n),
                                np.zeros(horizon * model.m), horizon)
    origin_rank, origin_sigma = svd_rank(origin_jac, tau)

    sampler = qmc.Halton(d=dim, scramble=True, seed=seed)
    unit = sampler.random(samples)
    points = (2.0 * unit - 1.0) * neighborhood_radius
    sample_reports = []
    for row in points:
        x = row[:model.n]
        u = row[model.n:]
        rank, sigma = svd_rank(input_jacobian(model, x, u, horizon), tau)
        sample_reports.append(RankSample(x=x.copy(), u_stack=u.copy(),
                                         singular_values=sigma, rank=rank))
    holds = origin_rank == model.n and all(s.rank == model.n for s in sample_reports)
    return RankReport(horizon=horizon, tau=float(tau),
                      neighborhood_radius=float(neighborhood_radius),
                      jacobian=origin_jac, singular_values=origin_sigma,
                      rank=origin_rank, samples=tuple(sample_reports),
                      holds_on_neighborhood=holds)


@dataclass(frozen=True, eq=False)
class SteeringProblem:
    x0: np.ndarray
    horizon: int
    initial_guess: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, np.float64)))
        if self.horizon < 1:
            raise ValueError("steering horizon must be at least 1")
        guess = (np.zeros(0) if self.initial_guess is None
                 else np.asarray(self.initial_guess, dtype=np.float64).ravel())
        object.__setattr__(self, "initial_guess", guess)


def steer_to_origin(model: SystemModel, problem: SteeringProblem,
                    tol: float = 1e-9, max_iters: int = 50,
                    tau: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Find a stacked input sequence driving x0 to the origin in `horizon` steps.

    Minimal-norm Gauss-Newton with Armijo backtracking on the residual norm.
    Raises SingularStep when the Jacobian rank collapses below n, and
    NoConvergence when the iteration budget runs out or no descent exists.
    """
    size = problem.horizon * model.m
    u = problem.initial_guess
    if u.size == 0:
        u = np.zeros(size)
    if u.shape != (size,):
        raise ValueError(f"initial guess must have length {size}, got {u.shape}")
    u = u.copy()
    residual = stacked_flow(model, problem.x0, u, problem.horizon)

    for iteration in range(1, max_iters + 1):
        rnorm = float(np.linalg.norm(residual))
        if rnorm <= tol:
            return u
        jac = input_jacobian(model, problem.x0, u, problem.horizon)
        rank, _ = svd_rank(jac, tau)
        if rank < model.n:
            raise SingularStep(f"Jacobian rank {rank} < {model.n} at iteration "
                               f"{iteration} (x0={problem.x0})")
        step = -np.linalg.pinv(jac, rcond=tau) @ residual
        alpha = 1.0
        for _ in range(60):
            candidate = u + alpha * step
            cand_residual = stacked_flow(model, problem.x0, candidate, problem.horizon)
            if np.linalg.norm(cand_residual) ** 2 <= (1 - ARMIJO_C * alpha) * rnorm ** 2:
                u, residual = candidate, cand_residual
                break
            alpha *= 0.5
        else:
            raise NoConvergence(iteration, rnorm)

    rnorm = float(np.linalg.norm(residual))
    if rnorm <= tol:
        return u
    raise NoConvergence(max_iters, rnorm)
