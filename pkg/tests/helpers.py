"""Independent oracles shared by the rank/steering tests and acceptance suite."""

import numpy as np

from deadbeat.systems import SystemModel, linear_system


def kalman_matrix(A, B, horizon):
    """[A^(N-1)B | ... | AB | B], matching the stacked-input column order."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    blocks = []
    for t in range(horizon):
        blocks.append(np.linalg.matrix_power(A, horizon - 1 - t) @ B)
    return np.hstack(blocks)


def closed_form_linear_jacobian(A, B, horizon):
    return kalman_matrix(A, B, horizon)


def random_linear_pair(rng, n, m):
    A = rng.uniform(-1.0, 1.0, size=(n, n))
    B = rng.uniform(-1.0, 1.0, size=(n, m))
    return A, B


def random_controllable_pair(rng, n, m, min_sigma=1e-3):
    """Rejection-sample (A, B) until the Kalman matrix is solidly full rank."""
    while True:
        A, B = random_linear_pair(rng, n, m)
        sigma = np.linalg.svd(kalman_matrix(A, B, n), compute_uv=False)
        if sigma[n - 1] > min_sigma:
            return A, B


def uncontrollable_pairs():
    # decoupled second state, and two identical modes driven identically
    yield np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([[1.0], [0.0]])
    yield np.array([[0.5, 0.0], [0.0, 0.5]]), np.array([[1.0], [1.0]])


def as_model(name, A, B, box_half=2.0, with_jacobians=True) -> SystemModel:
    n, m = np.asarray(B).shape
    state_box = [[-box_half, box_half]] * n
    input_box = [[-box_half, box_half]] * m
    if with_jacobians:
        return linear_system(name, A, B, state_box, input_box)
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    return SystemModel(name=name, n=n, m=m,
                       f=lambda x, u: x @ A.T + u @ B.T,
                       state_box=state_box, input_box=input_box)


def deadbeat_solve_2step(A, B, x0):
    """Exact (u0, u1) with A^2 x0 + A B u0 + B u1 = 0 for n=2, m=1."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64).reshape(2)
    M = np.column_stack([A @ B, B])
    return np.linalg.solve(M, -(A @ A) @ np.asarray(x0, dtype=np.float64))
