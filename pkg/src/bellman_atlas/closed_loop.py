"""Closed-loop synthesis, simulation and cost evaluation for linear systems."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteState, SingularRBPB
from .linear_system import LinearSystem

STABILITY_MARGIN = 1e-8
DIVERGENCE_BOUND = 1e6


@dataclass(frozen=True)
class LinearPolicy:
    """State feedback u = -K x."""

    K: np.ndarray
    mode: str


@dataclass(frozen=True)
class ClosedLoop:
    A_cl: np.ndarray
    eigenvalues: np.ndarray
    stable: bool


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    running_costs: np.ndarray
    cumulative_cost: float
    diverged: bool


def _gain(P: np.ndarray, sys: LinearSystem) -> np.ndarray:
    if sys.mode == "continuous":
        return np.linalg.solve(sys.R, sys.B.T @ P)
    gamma = 1.0 if sys.discount is None else sys.discount
    M = sys.R + gamma * sys.B.T @ P @ sys.B
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1.0):
        raise SingularRBPB("R + B'PB is singular")
    return np.linalg.solve(M, gamma * sys.B.T @ P @ sys.A)


def policy_from(P: np.ndarray, sys: LinearSystem) -> LinearPolicy:
    """Optimal feedback gain for the quadratic value x'Px."""
    K = _gain(np.asarray(P, dtype=float), sys)
    if not np.all(np.isfinite(K)):
        raise NonFiniteState("gain is not finite")
    return LinearPolicy(K=K, mode=sys.mode)


def is_stable_spectrum(eigs: np.ndarray, mode: str, margin: float = STABILITY_MARGIN) -> bool:
    if mode == "continuous":
        return bool(np.all(eigs.real < -margin))
    return bool(np.all(np.abs(eigs) < 1.0 - margin))


def closed_loop_matrix(P: np.ndarray, sys: LinearSystem) -> ClosedLoop:
    """Closed-loop matrix of the original (undiscounted) dynamics."""
    K = _gain(np.asarray(P, dtype=float), sys)
    A_cl = sys.A - sys.B @ K
    eigs = np.linalg.eigvals(A_cl)
    return ClosedLoop(A_cl=A_cl, eigenvalues=eigs, stable=is_stable_spectrum(eigs, sys.mode))


def _running_cost(sys: LinearSystem, x: np.ndarray, u: np.ndarray) -> float:
    return float(x @ sys.Q @ x + u @ sys.R @ u)


def simulate(
    sys: LinearSystem,
    policy: LinearPolicy,
    x0,
    horizon: float,
    dt: float = 0.01,
) -> Trajectory:
    """Roll the closed loop forward.

    Continuous mode integrates dx/dt = (A - BK) x with classical RK4 and
    accumulates the running cost by the trapezoid rule on the same knots;
    discrete mode iterates the map.  Stops early (``diverged=True``) when
    the state sup-norm exceeds 1e6.
    """
    x = np.asarray(x0, dtype=float).copy()
    K = policy.K
    if sys.mode == "continuous":
        if dt <= 0:
            raise ValueError("dt must be positive")
        steps = int(round(horizon / dt))
    else:
        steps = int(horizon)
    if steps <= 0:
        raise ValueError("horizon must be positive")

    A_cl = sys.A - sys.B @ K
    times = [0.0]
    states = [x.copy()]
    controls = [-K @ x]
    costs = [_running_cost(sys, x, controls[0])]
    diverged = False

    for k in range(steps):
        if sys.mode == "continuous":
            k1 = A_cl @ x
            k2 = A_cl @ (x + 0.5 * dt * k1)
            k3 = A_cl @ (x + 0.5 * dt * k2)
            k4 = A_cl @ (x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t = (k + 1) * dt
        else:
            x = A_cl @ x
            t = float(k + 1)
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(f"state became non-finite at step {k + 1}")
        u = -K @ x
        times.append(t)
        states.append(x.copy())
        controls.append(u)
        costs.append(_running_cost(sys, x, u))
        if np.max(np.abs(x)) > DIVERGENCE_BOUND:
            diverged = True
            break

    costs = np.array(costs)
    if sys.mode == "continuous":
        cumulative = float(dt * (0.5 * costs[0] + costs[1:-1].sum() + 0.5 * costs[-1]))
    else:
        cumulative = float(costs[:-1].sum())  # cost of executed transitions
    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        controls=np.array(controls),
        running_costs=costs,
        cumulative_cost=cumulative,
        diverged=diverged,
    )


def exact_cost(P: np.ndarray, x0) -> float:
    """Quadratic cost-to-go x0' P x0 of the stabilizing solution."""
    x0 = np.asarray(x0, dtype=float)
    return float(x0 @ np.asarray(P, dtype=float) @ x0)


def trajectory_to_csv(traj: Trajectory, path) -> None:
    """Write t, x_1..x_n, u_1..u_m, l rows (header mandatory)."""
    n = traj.states.shape[1]
    m = traj.controls.shape[1]
    header = ["t"] + [f"x_{i + 1}" for i in range(n)] + [f"u_{j + 1}" for j in range(m)] + ["l"]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for i in range(len(traj.times)):
            row = [repr(float(traj.times[i]))]
            row += [repr(float(v)) for v in traj.states[i]]
            row += [repr(float(v)) for v in traj.controls[i]]
            row.append(repr(float(traj.running_costs[i])))
            w.writerow(row)
