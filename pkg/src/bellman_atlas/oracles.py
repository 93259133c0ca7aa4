"""Independent stabilizing-solution solvers used to cross-check enumeration.

These deliberately avoid the eigenvector route: the continuous solver is
Newton's method on the Riccati operator (Kleinman iteration, one Lyapunov
solve per step, seeded by a Bass stabilizing gain), and the discrete
solver is plain fixed-point iteration of the Riccati difference equation.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import ConvergenceFailure
from .linear_system import LinearSystem, modified_dynamics


def bass_stabilizing_gain(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """A gain K with A - BK Hurwitz, for any controllable (A, B).

    Solves (A + beta I) Z + Z (A + beta I)' = 2 B B' with beta beyond the
    spectral abscissa; Z > 0 then certifies K = B' Z^-1.
    """
    n = A.shape[0]
    beta = np.linalg.norm(A, "fro") + 1.0
    M = A + beta * np.eye(n)
    Z = scipy.linalg.solve_continuous_lyapunov(M, -2.0 * B @ B.T)
    Z = (Z + Z.T) / 2
    return np.linalg.solve(Z, B).T


def kleinman_newton(
    sys: LinearSystem,
    tol: float = 1e-13,
    max_iter: int = 200,
) -> np.ndarray:
    """Stabilizing solution of the continuous ARE by Newton iteration.

    A discounted system is reduced to its shifted-drift equivalent first.
    Each step solves the closed-loop Lyapunov equation

        (A - B K)' P + P (A - B K) = -(Q + K' R K)

    and updates K = R^-1 B' P; convergence is monotone from a
    stabilizing start.
    """
    if sys.mode != "continuous":
        raise ValueError("kleinman_newton handles continuous systems")
    if sys.discount is not None:
        sys = modified_dynamics(sys)
    A, B, Q, R = sys.A, sys.B, sys.Q, sys.R
    K = bass_stabilizing_gain(A, B)
    P_prev = None
    for _ in range(max_iter):
        Acl = A - B @ K
        W = Q + K.T @ R @ K
        P = scipy.linalg.solve_continuous_lyapunov(Acl.T, -W)
        P = (P + P.T) / 2
        K = np.linalg.solve(R, B.T @ P)
        if P_prev is not None:
            if np.linalg.norm(P - P_prev, "fro") <= tol * (1 + np.linalg.norm(P, "fro")):
                return P
        P_prev = P
    raise ConvergenceFailure("Kleinman iteration did not converge")


def dare_fixed_point(
    sys: LinearSystem,
    tol: float = 1e-14,
    max_iter: int = 100_000,
) -> np.ndarray:
    """Stabilizing solution of the discrete ARE by value-style iteration.

    Iterates P <- Q + A'PA - A'PB (R + B'PB)^-1 B'PA from P = Q.  A
    discount gamma is folded in by scaling (A, B) with sqrt(gamma).
    """
    if sys.mode != "discrete":
        raise ValueError("dare_fixed_point handles discrete systems")
    A, B, Q, R = sys.A, sys.B, sys.Q, sys.R
    if sys.discount is not None:
        s = np.sqrt(sys.discount)
        A, B = s * A, s * B
    P = Q.copy()
    for _ in range(max_iter):
        BtP = B.T @ P
        K = np.linalg.solve(R + BtP @ B, BtP @ A)
        P_next = Q + A.T @ P @ (A - B @ K)
        P_next = (P_next + P_next.T) / 2
        if np.linalg.norm(P_next - P, "fro") <= tol * (1 + np.linalg.norm(P_next, "fro")):
            return P_next
        P = P_next
    raise ConvergenceFailure("Riccati difference iteration did not converge")


def stabilizing_solution(sys: LinearSystem) -> np.ndarray:
    """Dispatch to the mode-appropriate independent solver."""
    if sys.mode == "continuous":
        return kleinman_newton(sys)
    return dare_fixed_point(sys)
