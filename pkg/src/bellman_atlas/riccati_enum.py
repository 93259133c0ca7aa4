"""Exhaustive invariant-subspace solutions of algebraic Riccati equations.

Every conjugate-closed choice of n columns from the Hamiltonian
eigenbasis yields a candidate P = P2 P1^-1.  Choices that take whole
eigenvalue groups give isolated solutions; choices that split a repeated
group leave a free rotation inside that eigenspace and therefore
parametrize a continuum of solutions, which we sample rather than
enumerate.  All emitted matrices are verified against the Riccati
residual and classified by closed-loop stability.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import hamiltonian as ham_mod
from .closed_loop import is_stable_spectrum
from .errors import EnumerationCapExceeded, WrongMode
from .hamiltonian import SpectralData
from .linear_system import LinearSystem

ENUMERATION_CAP = 12
P1_COND_LIMIT = 1e10
DEDUP_RTOL = 1e-6
RESIDUAL_RTOL = 1e-8
BOUNDARY_POINTS = 64
BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class SubspaceSelection:
    """Which basis columns span the invariant subspace behind a solution.

    ``indices`` is empty for continuum samples, whose subspace depends on
    a random rotation rather than raw columns; ``lambda1`` always records
    the selected eigenvalue multiset.
    """

    indices: tuple[int, ...]
    conjugate_closed: bool
    lambda1: tuple[complex, ...]


@dataclass(frozen=True)
class RiccatiSolution:
    P: np.ndarray
    are_residual: float
    symmetry_defect: float
    closed_loop_eigs: np.ndarray
    stable: bool
    source: SubspaceSelection
    p1_condition: float
    multiplicity: int = 1
    family_parameter: str | None = None


@dataclass(frozen=True)
class ContinuumPattern:
    """A split of repeated eigenvalue groups: take ``counts[g]`` columns
    from group ``g`` with a free orthonormal mixing inside each split
    group."""

    counts: tuple[tuple[int, int], ...]  # (group index, how many columns)
    description: str


@dataclass
class SolutionFamily:
    """All solutions found for one system: isolated members plus any
    continuum patterns with a seeded sampler."""

    sys: LinearSystem
    spectral: SpectralData
    isolated: list[RiccatiSolution]
    continua: list[ContinuumPattern]
    discarded: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def count_discrete(self) -> int:
        return len(self.isolated)

    @property
    def has_continuum(self) -> bool:
        return len(self.continua) > 0

    @property
    def stable_index(self) -> int | None:
        for i, sol in enumerate(self.isolated):
            if sol.stable:
                return i
        return None

    def sample(self, k: int, seed: int = 0) -> list[RiccatiSolution]:
        """Draw ``k`` continuum members (round-robin over patterns)."""
        if not self.continua:
            return []
        rng = np.random.default_rng(seed)
        out: list[RiccatiSolution] = []
        i = 0
        attempts = 0
        while len(out) < k and attempts < 10 * k:
            pattern = self.continua[i % len(self.continua)]
            member = _sample_pattern(self, pattern, rng)
            if member is not None:
                out.append(member)
            i += 1
            attempts += 1
        return out


def are_residual_matrix(sys: LinearSystem, P: np.ndarray) -> np.ndarray:
    """Left-hand side of the system's Riccati identity at P.

    Continuous: A'P + PA - P B R^-1 B' P + Q  (minus P/tau if discounted).
    Discrete:   Q + A'PA - A'PB (R+B'PB)^-1 B'PA - P, with (A, B) scaled
    by sqrt(gamma) under a discount.
    """
    A, B, Q, R = sys.A, sys.B, sys.Q, sys.R
    if sys.mode == "continuous":
        res = A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q
        if sys.discount is not None:
            res = res - P / sys.discount
        return res
    if sys.discount is not None:
        s = np.sqrt(sys.discount)
        A, B = s * A, s * B
    BtP = B.T @ P
    M = R + BtP @ B
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1.0):
        return np.full_like(P, np.inf)
    K = np.linalg.solve(M, BtP @ A)
    return Q + A.T @ P @ A - A.T @ P @ B @ K - P


def are_residual(sys: LinearSystem, P: np.ndarray) -> float:
    return float(np.linalg.norm(are_residual_matrix(sys, P), "fro"))


def _closed_loop_eigs(sys: LinearSystem, P: np.ndarray) -> np.ndarray:
    from .closed_loop import closed_loop_matrix

    return closed_loop_matrix(P, sys).eigenvalues


def _make_solution(
    sys: LinearSystem,
    P: np.ndarray,
    source: SubspaceSelection,
    p1_cond: float,
    family_parameter: str | None = None,
) -> RiccatiSolution | None:
    res = are_residual(sys, P)
    if not np.isfinite(res) or res > RESIDUAL_RTOL * (1 + np.linalg.norm(P, "fro")) ** 2:
        return None
    eigs = _closed_loop_eigs(sys, P)
    return RiccatiSolution(
        P=P,
        are_residual=res,
        symmetry_defect=float(np.linalg.norm(P - P.T, "fro")),
        closed_loop_eigs=eigs,
        stable=is_stable_spectrum(eigs, sys.mode),
        source=source,
        p1_condition=p1_cond,
        multiplicity=1,
        family_parameter=family_parameter,
    )


def _real_basis_for_indices(spec: SpectralData, indices: tuple[int, ...]) -> np.ndarray:
    """Stack a real basis of the invariant subspace spanned by the given
    eigenvector columns (conjugate pairs contribute Re/Im columns)."""
    cols = []
    seen = set()
    for i in indices:
        if i in seen:
            continue
        j = int(spec.pairing[i])
        v = spec.basis[:, i]
        if j == i:
            cols.append(v.real)
        else:
            if j not in indices:
                raise ValueError("selection is not conjugate closed")
            cols.append(v.real)
            cols.append(v.imag)
            seen.add(j)
        seen.add(i)
    return np.column_stack(cols)


def _p_from_basis(basis: np.ndarray, n: int) -> tuple[np.ndarray | None, float]:
    P1, P2 = basis[:n, :], basis[n:, :]
    sv = np.linalg.svd(P1, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if not np.isfinite(cond) or cond >= P1_COND_LIMIT:
        return None, cond
    P = np.linalg.solve(P1.T, P2.T).T
    return P, cond


def _conjugate_closed_selections(spec: SpectralData):
    """Yield all conjugate-closed n-subsets of basis columns, as sorted
    index tuples.  Real eigenvalues are free singletons; complex ones are
    atomic conjugate pairs."""
    n = spec.n
    units: list[tuple[int, ...]] = []
    for i in range(2 * n):
        j = int(spec.pairing[i])
        if j == i:
            units.append((i,))
        elif i < j:
            units.append((i, j))
    for r in range(len(units) + 1):
        for combo in itertools.combinations(units, r):
            size = sum(len(u) for u in combo)
            if size == n:
                yield tuple(sorted(i for u in combo for i in u))


def _group_of_index(spec: SpectralData) -> dict[int, int]:
    out = {}
    for g, idxs in enumerate(spec.eigenspace_groups):
        for i in idxs:
            out[i] = g
    return out


def _group_value(spec: SpectralData, g: int) -> complex:
    idxs = spec.eigenspace_groups[g]
    return complex(np.mean(spec.eigenvalues[list(idxs)]))


def _format_eig(z: complex) -> str:
    if abs(z.imag) < 1e-9:
        return f"{z.real:.6g}"
    return f"{z.real:.6g}{z.imag:+.6g}j"


def enumerate_solutions(spec: SpectralData, sys: LinearSystem) -> SolutionFamily:
    """Enumerate isolated subspace solutions and detect continua.

    Selections taking whole eigenvalue groups are rotation-invariant and
    produce isolated P's (deduplicated, residual-checked).  Selections
    splitting a repeated group are collected into ``ContinuumPattern``s
    to be sampled.  Raises :class:`EnumerationCapExceeded` for n > 12.
    """
    n = spec.n
    if n > ENUMERATION_CAP:
        raise EnumerationCapExceeded(
            f"n={n} would require C({2 * n},{n}) subspace selections; cap is {ENUMERATION_CAP}"
        )
    if spec.defective:
        return _enumerate_defective(spec, sys)

    group_of = _group_of_index(spec)
    group_sizes = [len(g) for g in spec.eigenspace_groups]
    family = SolutionFamily(sys=sys, spectral=spec, isolated=[], continua=[])
    seen_patterns: set[tuple[tuple[int, int], ...]] = set()

    for sel in _conjugate_closed_selections(spec):
        counts: dict[int, int] = {}
        for i in sel:
            counts[group_of[i]] = counts.get(group_of[i], 0) + 1
        split = [(g, c) for g, c in sorted(counts.items()) if c < group_sizes[g]]
        if split:
            pattern = tuple(sorted(counts.items()))
            if pattern not in seen_patterns:
                seen_patterns.add(pattern)
                desc = ", ".join(
                    f"{c} of {group_sizes[g]} columns at eigenvalue {_format_eig(_group_value(spec, g))}"
                    for g, c in pattern
                )
                family.continua.append(ContinuumPattern(counts=pattern, description=desc))
            continue

        basis = _real_basis_for_indices(spec, sel)
        P, cond = _p_from_basis(basis, n)
        if P is None:
            family.discarded += 1
            continue
        source = SubspaceSelection(
            indices=sel,
            conjugate_closed=True,
            lambda1=tuple(complex(spec.eigenvalues[i]) for i in sel),
        )
        sol = _make_solution(sys, P, source, cond)
        if sol is None:
            warnings.warn("discarding subspace candidate with large Riccati residual")
            family.discarded += 1
            continue
        merged = False
        for k, kept in enumerate(family.isolated):
            if np.linalg.norm(sol.P - kept.P, "fro") < DEDUP_RTOL * (
                1 + np.linalg.norm(sol.P, "fro")
            ):
                family.isolated[k] = replace(kept, multiplicity=kept.multiplicity + 1)
                merged = True
                break
        if not merged:
            family.isolated.append(sol)
    return family


def _enumerate_defective(spec: SpectralData, sys: LinearSystem) -> SolutionFamily:
    """Coarser enumeration over whole Schur clusters when H is defective."""
    ham = ham_mod.build(sys)
    n = spec.n
    groups = spec.eigenspace_groups
    family = SolutionFamily(
        sys=sys, spectral=spec, isolated=[], continua=[], meta={"defective": True}
    )
    sizes = [len(g) for g in groups]
    for r in range(len(groups) + 1):
        for combo in itertools.combinations(range(len(groups)), r):
            if sum(sizes[g] for g in combo) != n:
                continue
            targets = np.concatenate(
                [spec.eigenvalues[list(groups[g])] for g in combo]
            ) if combo else np.empty(0, dtype=complex)
            if not _conjugate_closed_multiset(targets):
                continue

            def want(re, im, _t=targets):
                return bool(np.min(np.abs(complex(re, im) - _t)) < 1e-6 * max(1, np.abs(_t).max()))

            T, Z, sdim = scipy.linalg.schur(ham.H, output="real", sort=want)
            if sdim != n:
                continue
            P, cond = _p_from_basis(Z[:, :n], n)
            if P is None:
                family.discarded += 1
                continue
            source = SubspaceSelection(
                indices=tuple(int(i) for g in combo for i in groups[g]),
                conjugate_closed=True,
                lambda1=tuple(complex(z) for z in targets),
            )
            sol = _make_solution(sys, P, source, cond)
            if sol is None:
                family.discarded += 1
                continue
            if not any(
                np.linalg.norm(sol.P - kept.P, "fro")
                < DEDUP_RTOL * (1 + np.linalg.norm(sol.P, "fro"))
                for kept in family.isolated
            ):
                family.isolated.append(sol)
    return family


def _conjugate_closed_multiset(vals: np.ndarray, tol: float = 1e-8) -> bool:
    for v in vals:
        if abs(v.imag) > tol and np.min(np.abs(vals - np.conj(v))) > tol:
            return False
    return True


def _random_orthonormal_mix(m: int, k: int, rng: np.random.Generator, complex_: bool) -> np.ndarray:
    """First k columns of a random (unitary) m x m mixing matrix; a plain
    rotation angle for the 2-dimensional real case."""
    if m == 2 and k == 1 and not complex_:
        theta = rng.uniform(0.0, np.pi)
        return np.array([[np.cos(theta)], [np.sin(theta)]])
    if complex_:
        Z = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    else:
        Z = rng.standard_normal((m, m))
    Qm, Rm = np.linalg.qr(Z)
    Qm = Qm * np.sign(np.diagonal(Rm))
    return Qm[:, :k]


def _sample_pattern(
    family: SolutionFamily, pattern: ContinuumPattern, rng: np.random.Generator
) -> RiccatiSolution | None:
    spec, sys = family.spectral, family.sys
    groups = spec.eigenspace_groups
    n = spec.n
    cols: list[np.ndarray] = []
    mixes: dict[int, np.ndarray] = {}
    counts = dict(pattern.counts)
    param_bits = []
    for g, c in pattern.counts:
        idxs = list(groups[g])
        Vg = spec.basis[:, idxs]
        m = len(idxs)
        if c == m:
            mixed = Vg
        else:
            if g in mixes:
                mix = mixes[g]
            else:
                is_complex = bool(np.max(np.abs(spec.eigenvalues[idxs].imag)) > 1e-9)
                # mirror the mixing onto the conjugate group so the stacked
                # selection stays conjugate closed
                conj_g = _conjugate_group(spec, g)
                mix = _random_orthonormal_mix(m, c, rng, is_complex)
                mixes[g] = mix
                if conj_g is not None and conj_g != g and counts.get(conj_g) == c:
                    mixes[conj_g] = np.conj(mix)
                param_bits.append(f"group {g}: mix {np.round(mix.ravel(), 6).tolist()}")
            mixed = Vg @ mixes[g]
        cols.append(mixed)
    C = np.column_stack(cols)
    basis = _realify(C)
    if basis.shape[1] != n:
        return None
    P, cond = _p_from_basis(basis, n)
    if P is None:
        return None
    lam = []
    for g, c in pattern.counts:
        lam.extend([_group_value(spec, g)] * c)
    source = SubspaceSelection(indices=(), conjugate_closed=True, lambda1=tuple(lam))
    return _make_solution(sys, P, source, cond, family_parameter="; ".join(param_bits))


def _conjugate_group(spec: SpectralData, g: int) -> int | None:
    val = _group_value(spec, g)
    if abs(val.imag) < 1e-9:
        return g
    for h in range(len(spec.eigenspace_groups)):
        if abs(_group_value(spec, h) - np.conj(val)) < 1e-6 * max(1, abs(val)):
            return h
    return None


def _realify(C: np.ndarray) -> np.ndarray:
    """Turn a conjugate-closed complex column set into a real basis of the
    same span (Re/Im splitting of genuinely complex columns)."""
    if np.max(np.abs(C.imag)) < 1e-12:
        return C.real.copy()
    cols = []
    used = np.zeros(C.shape[1], dtype=bool)
    for i in range(C.shape[1]):
        if used[i]:
            continue
        v = C[:, i]
        if np.max(np.abs(v.imag)) < 1e-12:
            cols.append(v.real)
            used[i] = True
            continue
        # find the conjugate partner column
        partner = None
        for j in range(i + 1, C.shape[1]):
            if not used[j] and np.linalg.norm(C[:, j] - np.conj(v)) < 1e-8 * (
                1 + np.linalg.norm(v)
            ):
                partner = j
                break
        cols.append(v.real)
        cols.append(v.imag)
        used[i] = True
        if partner is not None:
            used[partner] = True
    return np.column_stack(cols)


def sample_family(
    family: SolutionFamily,
    group: tuple[int, ...],
    k: int,
    seed: int = 0,
) -> list[RiccatiSolution]:
    """Sample k members of the continua that split the given eigenvalue
    group (an entry of ``spectral.eigenspace_groups``).  Empty when the
    group has multiplicity 1 or no pattern splits it."""
    if len(group) < 2:
        return []
    g_idx = None
    for g, idxs in enumerate(family.spectral.eigenspace_groups):
        if tuple(idxs) == tuple(group):
            g_idx = g
            break
    if g_idx is None:
        raise ValueError("group is not an eigenspace group of this family")
    patterns = [
        p
        for p in family.continua
        if any(g == g_idx and c < len(group) for g, c in p.counts)
    ]
    if not patterns:
        return []
    rng = np.random.default_rng(seed)
    out: list[RiccatiSolution] = []
    i = 0
    attempts = 0
    while len(out) < k and attempts < 10 * k:
        member = _sample_pattern(family, patterns[i % len(patterns)], rng)
        if member is not None:
            out.append(member)
        i += 1
        attempts += 1
    return out


# ---------------------------------------------------------------------------
# Dirichlet boundary filtering


@dataclass(frozen=True)
class SphereBoundary:
    """Dirichlet condition V = value on the sphere ||x||^2 = radius_sq."""

    radius_sq: float
    value: float


def sphere_points(n: int, radius_sq: float, count: int = BOUNDARY_POINTS) -> np.ndarray:
    """Deterministic low-discrepancy points on the sphere of given radius."""
    r = np.sqrt(radius_sq)
    if n == 1:
        signs = np.array([1.0 if i % 2 == 0 else -1.0 for i in range(count)])
        return (r * signs)[:, None]
    if n == 2:
        theta = 2 * np.pi * np.arange(count) / count
        return r * np.column_stack([np.cos(theta), np.sin(theta)])
    from scipy.stats import qmc, norm

    # skip the first Halton point (all 0.5 maps to the origin)
    raw = qmc.Halton(d=n, scramble=False).random(count + 1)[1:]
    g = norm.ppf(raw)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return r * g


def boundary_filter(
    family: SolutionFamily,
    boundaries,
    allow_offset: bool,
    family_samples: int = 16,
    seed: int = 0,
) -> list[tuple[RiccatiSolution, float]]:
    """Keep the solutions (plus sampled continuum members) compatible with
    all Dirichlet boundary conditions, optionally up to a constant offset.

    Only meaningful for continuous undiscounted systems: a constant shift
    of the value function stays a solution only when no 1/tau term is
    present.  The offset is solved from the first boundary point and then
    verified everywhere to within 1e-8.
    """
    if family.sys.mode != "continuous" or family.sys.discount is not None:
        raise WrongMode("boundary filtering applies to continuous undiscounted systems")
    bounds = [b if isinstance(b, SphereBoundary) else SphereBoundary(*b) for b in boundaries]
    if not bounds:
        return [(sol, 0.0) for sol in family.isolated]
    n = family.sys.n
    candidates = list(family.isolated) + family.sample(family_samples, seed=seed)
    survivors: list[tuple[RiccatiSolution, float]] = []
    point_sets = [sphere_points(n, b.radius_sq) for b in bounds]
    for sol in candidates:
        vals0 = np.einsum("ij,jk,ik->i", point_sets[0], sol.P, point_sets[0])
        c = bounds[0].value - float(vals0[0]) if allow_offset else 0.0
        ok = True
        for b, pts in zip(bounds, point_sets):
            vals = np.einsum("ij,jk,ik->i", pts, sol.P, pts)
            if np.max(np.abs(vals + c - b.value)) > BOUNDARY_TOL:
                ok = False
                break
        if ok:
            survivors.append((sol, c))
    return survivors


# ---------------------------------------------------------------------------
# Serialization helpers (shared by the CLI)


def _complex_to_json(z: complex) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def solution_to_json_dict(sol: RiccatiSolution, kind: str = "isolated") -> dict:
    return {
        "kind": kind,
        "P": sol.P.tolist(),
        "are_residual": sol.are_residual,
        "symmetry_defect": sol.symmetry_defect,
        "closed_loop_eigs": [_complex_to_json(z) for z in sol.closed_loop_eigs],
        "stable": sol.stable,
        "p1_condition": sol.p1_condition,
        "multiplicity": sol.multiplicity,
        "source": {
            "indices": list(sol.source.indices),
            "lambda1": [_complex_to_json(z) for z in sol.source.lambda1],
        },
        "family_parameter": sol.family_parameter,
    }
