"""Hamiltonian matrices of LQR problems and their paired spectra.

The continuous-time matrix is

    H = [[ A, -B R^-1 B'],
         [-Q, -A'       ]]

whose spectrum is symmetric about the imaginary axis; the discrete-time
counterpart

    H = [[A + B R^-1 B' A^-T Q, -B R^-1 B' A^-T],
         [-A^-T Q,               A^-T          ]]

is symplectic, so eigenvalues come in (lambda, 1/lambda) pairs.  For a
controllable/observable instance the split is exactly n stable
eigenvalues and n unstable ones, which is what makes subspace
enumeration well defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConvergenceFailure, SingularA
from .linear_system import LinearSystem, modified_dynamics

PAIRING_RTOL = 1e-8
GROUP_RTOL = 1e-6
DEFECTIVE_COND = 1e12


@dataclass(frozen=True)
class HamiltonianMatrix:
    H: np.ndarray
    mode: str
    n: int


@dataclass(frozen=True)
class SpectralData:
    """Eigen-structure of a Hamiltonian with conjugate bookkeeping.

    Attributes:
        eigenvalues: all 2n eigenvalues.
        basis: right-eigenvector columns (complex), or the orthonormal
            real Schur basis when ``defective`` is set.
        pairing: ``pairing[i]`` is the index of conj(eigenvalues[i]);
            fixed points are real eigenvalues.
        stable_mask: per-eigenvalue stability (Re < 0, resp. |.| < 1).
        defective: True when no full eigenvector basis exists and
            ``basis`` holds a Schur basis instead.
        eigenspace_groups: index groups of (near-)equal eigenvalues.
        mode: "continuous" or "discrete".
        n: half the matrix dimension.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray
    pairing: np.ndarray
    stable_mask: np.ndarray
    defective: bool
    eigenspace_groups: tuple[tuple[int, ...], ...]
    mode: str
    n: int


def build(sys: LinearSystem) -> HamiltonianMatrix:
    """Assemble the Hamiltonian of a validated system.

    A continuous discount is first folded into the drift via
    :func:`modified_dynamics`, so the spectrum always refers to an
    undiscounted problem.
    """
    if sys.mode == "continuous":
        if sys.discount is not None:
            sys = modified_dynamics(sys)
        A, B, Q, R = sys.A, sys.B, sys.Q, sys.R
        G = B @ np.linalg.solve(R, B.T)
        H = np.block([[A, -G], [-Q, -A.T]])
    else:
        # A discrete discount gamma is equivalent to scaling the dynamics
        # by sqrt(gamma); build from the scaled pair.
        A, B, Q, R = sys.A, sys.B, sys.Q, sys.R
        if sys.discount is not None:
            s = np.sqrt(sys.discount)
            A, B = s * A, s * B
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-1] <= 1e-12 * max(sv[0], 1.0):
            raise SingularA("discrete Hamiltonian needs invertible A")
        G = B @ np.linalg.solve(R, B.T)
        AinvT = np.linalg.inv(A).T
        H = np.block([[A + G @ AinvT @ Q, -G @ AinvT], [-AinvT @ Q, AinvT]])
    return HamiltonianMatrix(H=H, mode=sys.mode, n=sys.n)


def _pairing(eigs: np.ndarray, tol: float) -> np.ndarray:
    """Match each eigenvalue to its conjugate partner (an involution)."""
    m = len(eigs)
    pairing = -np.ones(m, dtype=int)
    for i in range(m):
        if pairing[i] >= 0:
            continue
        if abs(eigs[i].imag) <= tol:
            pairing[i] = i
            continue
        free = [j for j in range(m) if pairing[j] < 0 and j != i]
        j = min(free, key=lambda j: abs(eigs[j] - np.conj(eigs[i])))
        pairing[i] = j
        pairing[j] = i
    return pairing


def _group_indices(eigs: np.ndarray, tol: float) -> tuple[tuple[int, ...], ...]:
    """Partition indices by eigenvalue proximity (transitive linking)."""
    m = len(eigs)
    group_of = -np.ones(m, dtype=int)
    groups: list[list[int]] = []
    for i in range(m):
        if group_of[i] >= 0:
            continue
        g = len(groups)
        groups.append([i])
        group_of[i] = g
        for j in range(i + 1, m):
            if group_of[j] < 0 and abs(eigs[j] - eigs[i]) <= tol:
                group_of[j] = g
                groups[g].append(j)
    return tuple(tuple(g) for g in groups)


def spectrum(ham: HamiltonianMatrix) -> SpectralData:
    """Eigen-decompose H, recording pairing, stability and groups.

    Falls back to a real Schur basis when the eigenvector matrix is
    numerically rank-deficient (defective H).
    """
    H, n = ham.H, ham.n
    scale = np.linalg.norm(H, 2)
    tol = PAIRING_RTOL * max(scale, 1.0)
    try:
        eigs, V = np.linalg.eig(H)
    except np.linalg.LinAlgError as e:  # pragma: no cover - LAPACK failure
        raise ConvergenceFailure(str(e)) from e

    defective = False
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > DEFECTIVE_COND:
        defective = True
        _, Z = scipy.linalg.schur(H, output="real")
        basis = Z.astype(complex)
    else:
        basis = V / np.linalg.norm(V, axis=0, keepdims=True)

    if ham.mode == "continuous":
        stable = eigs.real < 0
    else:
        stable = np.abs(eigs) < 1.0

    return SpectralData(
        eigenvalues=eigs,
        basis=basis,
        pairing=_pairing(eigs, tol),
        stable_mask=stable,
        defective=defective,
        eigenspace_groups=_group_indices(eigs, GROUP_RTOL * max(scale, 1.0)),
        mode=ham.mode,
        n=n,
    )


def symmetry_defect(ham: HamiltonianMatrix, spec: SpectralData) -> float:
    """Max distance from each eigenvalue to the mirrored spectrum.

    Mirror map: lambda -> -lambda (continuous) or lambda -> 1/lambda
    (discrete).  Zero for an exact Hamiltonian/symplectic spectrum.
    """
    eigs = spec.eigenvalues
    mirrored = -eigs if ham.mode == "continuous" else 1.0 / eigs
    return float(max(np.min(np.abs(eigs - lam)) for lam in mirrored))


def eigen_residual(ham: HamiltonianMatrix, spec: SpectralData) -> float:
    """Largest ||H v - lambda v|| over reported eigenpairs (0 if defective)."""
    if spec.defective:
        return 0.0
    R = ham.H @ spec.basis - spec.basis * spec.eigenvalues[None, :]
    return float(np.max(np.linalg.norm(R, axis=0)))
