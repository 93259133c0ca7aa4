"""Linear-quadratic problem instances and their structural diagnostics.

A :class:`LinearSystem` bundles the dynamics pair (A, B), the quadratic
cost pair (Q, R), the time mode and an optional discount.  ``validate``
enforces the well-posedness conditions, ``diagnose`` computes the
controllability/observability ranks that the spectral results rely on,
and ``modified_dynamics`` folds a continuous discount into a shifted
drift matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DimensionMismatch,
    NotPositiveDefinite,
    NotPositiveSemidefinite,
    SingularA,
    WrongMode,
)

SYMMETRY_TOL = 1e-10
EIG_TOL = 1e-10
RANK_RTOL = 1e-8


def _as_matrix(M, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionMismatch(f"{name} must be a 2-d matrix, got shape {M.shape}")
    return M


@dataclass(frozen=True)
class LinearSystem:
    """An LQR problem instance.

    Attributes:
        A: drift / transition matrix, n x n.
        B: control matrix, n x m.
        Q: state cost, symmetric PSD, n x n.
        R: control cost, symmetric PD, m x m.
        mode: "continuous" or "discrete".
        discount: None for the undiscounted problem; otherwise the
            continuous time constant tau > 0 or the discrete factor
            gamma in (0, 1].
    """

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    mode: str = "continuous"
    discount: float | None = None

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class SystemDiagnostics:
    controllable: bool
    observable: bool
    controllability_rank: int
    observability_rank: int


def make_system(A, B, Q, R, mode: str = "continuous", discount: float | None = None) -> LinearSystem:
    """Build and validate a :class:`LinearSystem` from array-likes."""
    sys = LinearSystem(
        A=_as_matrix(A, "A"),
        B=_as_matrix(B, "B"),
        Q=_as_matrix(Q, "Q"),
        R=_as_matrix(R, "R"),
        mode=mode,
        discount=None if discount is None else float(discount),
    )
    return validate(sys)


def validate(sys: LinearSystem) -> LinearSystem:
    """Check all type invariants, returning the system unchanged.

    Raises:
        DimensionMismatch: inconsistent shapes or unknown mode.
        NotPositiveSemidefinite: Q asymmetric or indefinite.
        NotPositiveDefinite: R asymmetric or not PD.
        SingularA: discrete mode with non-invertible A.
    """
    A, B, Q, R = sys.A, sys.B, sys.Q, sys.R
    if sys.mode not in ("continuous", "discrete"):
        raise DimensionMismatch(f"unknown mode {sys.mode!r}")
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatch(f"A must be square, got {A.shape}")
    if B.ndim != 2 or B.shape[0] != n:
        raise DimensionMismatch(f"B must have {n} rows, got {B.shape}")
    m = B.shape[1]
    if Q.shape != (n, n):
        raise DimensionMismatch(f"Q must be {n}x{n}, got {Q.shape}")
    if R.shape != (m, m):
        raise DimensionMismatch(f"R must be {m}x{m}, got {R.shape}")

    if np.linalg.norm(Q - Q.T, "fro") > SYMMETRY_TOL:
        raise NotPositiveSemidefinite("Q is not symmetric")
    if np.min(np.linalg.eigvalsh((Q + Q.T) / 2)) < -EIG_TOL:
        raise NotPositiveSemidefinite("Q has a negative eigenvalue")
    if np.linalg.norm(R - R.T, "fro") > SYMMETRY_TOL:
        raise NotPositiveDefinite("R is not symmetric")
    if R.size == 0 or np.min(np.linalg.eigvalsh((R + R.T) / 2)) < EIG_TOL:
        raise NotPositiveDefinite("R is not positive definite")

    if sys.discount is not None and sys.discount <= 0:
        raise DimensionMismatch("discount must be positive")
    if sys.mode == "discrete" and sys.discount is not None and sys.discount > 1:
        raise DimensionMismatch("discrete discount must lie in (0, 1]")

    if sys.mode == "discrete":
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-1] <= 1e-12 * max(sv[0], 1.0):
            raise SingularA("discrete mode requires an invertible A")
    return sys


def _rank(M: np.ndarray) -> int:
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0:
        return 0
    return int(np.sum(sv > RANK_RTOL * sv[0]))


def _observability_factor(Q: np.ndarray) -> np.ndarray:
    # Any full-rank factor C with C'C = Q yields the same observability
    # verdict; Cholesky of the regularised Q keeps this cheap and stable.
    L = np.linalg.cholesky(Q + 1e-12 * np.eye(Q.shape[0]))
    C = L.T
    row_norms = np.linalg.norm(C, axis=1)
    keep = row_norms > 1e-10 * max(row_norms.max(), 1.0)
    return C[keep]


def diagnose(sys: LinearSystem) -> SystemDiagnostics:
    """Controllability of (A, B) and observability of (Q, A) by rank tests."""
    A, B, Q = sys.A, sys.B, sys.Q
    n = sys.n
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    ctrb = np.hstack(blocks)

    C = _observability_factor(Q)
    rows = [C]
    for _ in range(n - 1):
        rows.append(rows[-1] @ A)
    obsv = np.vstack(rows)

    c_rank = _rank(ctrb)
    o_rank = _rank(obsv)
    return SystemDiagnostics(
        controllable=c_rank == n,
        observable=o_rank == n,
        controllability_rank=c_rank,
        observability_rank=o_rank,
    )


def modified_dynamics(sys: LinearSystem) -> LinearSystem:
    """Fold a continuous discount tau into the drift: A <- A - I/(2 tau).

    The returned system is undiscounted and shares the quadratic value
    matrices of the original discounted problem.

    Raises:
        WrongMode: discrete mode, or no discount present.
    """
    if sys.mode != "continuous" or sys.discount is None:
        raise WrongMode("modified_dynamics needs a continuous system with a discount")
    shift = 1.0 / (2.0 * sys.discount)
    return replace(sys, A=sys.A - shift * np.eye(sys.n), discount=None)


def to_json_dict(sys: LinearSystem) -> dict:
    d = {
        "mode": sys.mode,
        "A": sys.A.tolist(),
        "B": sys.B.tolist(),
        "Q": sys.Q.tolist(),
        "R": sys.R.tolist(),
    }
    key = "tau" if sys.mode == "continuous" else "gamma"
    d[key] = sys.discount
    return d


def from_json_dict(d: dict) -> LinearSystem:
    mode = d.get("mode", "continuous")
    discount = d.get("tau") if mode == "continuous" else d.get("gamma")
    if discount is None:
        discount = d.get("discount")
    return make_system(d["A"], d["B"], d["Q"], d["R"], mode=mode, discount=discount)


def load_system(path) -> LinearSystem:
    with open(path) as f:
        return from_json_dict(json.load(f))


def save_system(sys: LinearSystem, path) -> None:
    with open(path, "w") as f:
        json.dump(to_json_dict(sys), f, indent=2)
        f.write("\n")
