"""States, ensembles, measurements, CP maps, instruments and Choi matrices.

All operators are plain complex numpy arrays on finite-dimensional spaces;
multipartite structure is carried separately as a tuple of party dimensions.
Values are immutable after construction and every operation is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import prod

import numpy as np

from .caratheodory import WeightedPointSet, hermitian_to_vector
from .errors import DimensionMismatch, NotPsd
from .linalg import (
    PSD_TOL,
    RANK_TOL,
    as_matrix,
    dagger,
    fnorm,
    hermitian_eig,
    inv_sqrt_on_support,
    sqrt_psd,
)

ENSEMBLE_TOL = 1e-9
POVM_SUM_TOL = 1e-9
INSTRUMENT_TOL = 1e-8
CHOI_PSD_TOL = 1e-8
KRAUS_TOL = 1e-9


@dataclass(frozen=True)
class MultipartiteSpace:
    """Tensor-product space described by its per-party dimensions."""

    party_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.party_dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"invalid party dimensions {self.party_dims}")
        object.__setattr__(self, "party_dims", dims)

    @property
    def total_dim(self) -> int:
        return prod(self.party_dims)

    @property
    def num_parties(self) -> int:
        return len(self.party_dims)

    def replacing(self, party: int, dim: int) -> "MultipartiteSpace":
        dims = list(self.party_dims)
        dims[party] = dim
        return MultipartiteSpace(tuple(dims))


@dataclass(frozen=True)
class Ensemble:
    """Weighted list of states {p_k rho_k}; may be unnormalized."""

    space: MultipartiteSpace
    members: tuple[tuple[float, np.ndarray], ...]

    def __post_init__(self):
        members = tuple((float(p), as_matrix(rho)) for p, rho in self.members)
        object.__setattr__(self, "members", members)

    @property
    def weights(self) -> np.ndarray:
        return np.array([p for p, _ in self.members])

    @property
    def states(self) -> list[np.ndarray]:
        return [rho for _, rho in self.members]

    @property
    def probability(self) -> float:
        """Total mass sum p_k tr(rho_k); equals sum p_k once states are unit trace."""
        return float(sum(p * np.trace(rho).real for p, rho in self.members))

    @property
    def is_normalized(self) -> bool:
        if abs(self.probability - 1.0) > 1e-10:
            return False
        return all(abs(np.trace(rho).real - 1.0) <= ENSEMBLE_TOL for _, rho in self.members)

    def validate(self, tol: float = ENSEMBLE_TOL) -> list[str]:
        problems = []
        d = self.space.total_dim
        for k, (p, rho) in enumerate(self.members):
            if rho.shape != (d, d):
                problems.append(f"member {k}: state is {rho.shape}, space dim {d}")
                continue
            if p < -tol:
                problems.append(f"member {k}: negative weight {p:.3e}")
            if fnorm(rho - dagger(rho)) > tol * max(1.0, fnorm(rho)):
                problems.append(f"member {k}: state not hermitian")
                continue
            w = hermitian_eig(rho).eigenvalues
            if w.size and w[0] < -tol:
                problems.append(f"member {k}: eigenvalue {w[0]:.3e} < -{tol:.1e}")
        if self.probability > 1.0 + 1e-9:
            problems.append(f"total probability {self.probability:.12f} exceeds 1")
        return problems

    def normalize(self) -> tuple[float, "Ensemble"]:
        """Split into (probability, normalized ensemble with unit-trace states)."""
        q = self.probability
        if q <= 0.0:
            raise ValueError("cannot normalize a zero-probability ensemble")
        d = self.space.total_dim
        members = []
        for p, rho in self.members:
            tr = float(np.trace(rho).real)
            if tr > 0.0:
                members.append((p * tr / q, rho / tr))
            else:
                members.append((0.0, np.eye(d, dtype=np.complex128) / d))
        return q, Ensemble(self.space, tuple(members))


@dataclass(frozen=True)
class Povm:
    """POVM elements E_i >= 0 with sum E_i = I."""

    dim: int
    elements: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(as_matrix(e) for e in self.elements))

    def validate(self, psd_tol: float = PSD_TOL, sum_tol: float = POVM_SUM_TOL) -> list[str]:
        problems = []
        total = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for i, e in enumerate(self.elements):
            if e.shape != (self.dim, self.dim):
                problems.append(f"element {i}: shape {e.shape} != ({self.dim}, {self.dim})")
                continue
            if fnorm(e - dagger(e)) > psd_tol * max(1.0, fnorm(e)):
                problems.append(f"element {i}: not hermitian")
                continue
            w = hermitian_eig(e).eigenvalues
            if w.size and w[0] < -psd_tol:
                problems.append(f"element {i}: eigenvalue {w[0]:.3e} < -{psd_tol:.1e}")
            total += e
        if fnorm(total - np.eye(self.dim)) > sum_tol:
            problems.append(f"completeness defect {fnorm(total - np.eye(self.dim)):.3e}")
        return problems


@dataclass(frozen=True)
class CpMap:
    """Completely positive, trace-nonincreasing map in Kraus form."""

    in_dim: int
    out_dim: int
    kraus: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        ops = tuple(as_matrix(k) for k in self.kraus)
        for k in ops:
            if k.shape != (self.out_dim, self.in_dim):
                raise DimensionMismatch(
                    f"Kraus operator {k.shape} != ({self.out_dim}, {self.in_dim})"
                )
        object.__setattr__(self, "kraus", ops)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros((self.out_dim, self.out_dim), dtype=np.complex128)
        for k in self.kraus:
            out += k @ rho @ dagger(k)
        return out

    def element(self) -> np.ndarray:
        """POVM element sum_j K_j^dagger K_j of this branch."""
        e = np.zeros((self.in_dim, self.in_dim), dtype=np.complex128)
        for k in self.kraus:
            e += dagger(k) @ k
        return e

    def scaled(self, c: float) -> "CpMap":
        root = np.sqrt(c)
        return CpMap(self.in_dim, self.out_dim, tuple(root * k for k in self.kraus))

    def is_trace_nonincreasing(self, tol: float = PSD_TOL) -> bool:
        w = hermitian_eig(self.element()).eigenvalues
        return bool(w.size == 0 or w[-1] <= 1.0 + tol)


@dataclass(frozen=True)
class Instrument:
    """Labelled family of CP maps whose elements sum to the identity."""

    in_dim: int
    branches: tuple[tuple[object, CpMap], ...]

    def completeness_defect(self) -> float:
        total = np.zeros((self.in_dim, self.in_dim), dtype=np.complex128)
        for _, cp in self.branches:
            total += cp.element()
        return fnorm(total - np.eye(self.in_dim))

    def validate(self, tol: float = INSTRUMENT_TOL) -> list[str]:
        problems = []
        for label, cp in self.branches:
            if cp.in_dim != self.in_dim:
                problems.append(f"branch {label!r}: in_dim {cp.in_dim} != {self.in_dim}")
        defect = self.completeness_defect()
        if defect > tol:
            problems.append(f"completeness defect {defect:.3e}")
        return problems

    def choi_by_label(self) -> dict[object, "ChoiMatrix"]:
        return {label: choi_of(cp) for label, cp in self.branches}


@dataclass(frozen=True)
class ChoiMatrix:
    """Choi representation C = sum_ij E_ij (x) map(E_ij), input index first."""

    in_dim: int
    out_dim: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = as_matrix(self.matrix)
        n = self.in_dim * self.out_dim
        if m.shape != (n, n):
            raise DimensionMismatch(f"Choi matrix {m.shape} != ({n}, {n})")
        object.__setattr__(self, "matrix", m)


def embed_local(k: np.ndarray, party: int, space: MultipartiteSpace) -> np.ndarray:
    """Lift a local operator to I (x) ... (x) K (x) ... (x) I on the global space."""
    k = as_matrix(k)
    if not 0 <= party < space.num_parties:
        raise DimensionMismatch(f"party {party} outside {space.num_parties} parties")
    if k.shape[1] != space.party_dims[party]:
        raise DimensionMismatch(
            f"operator input dim {k.shape[1]} != party dim {space.party_dims[party]}"
        )
    before = prod(space.party_dims[:party])
    after = prod(space.party_dims[party + 1 :])
    return np.kron(np.kron(np.eye(before), k), np.eye(after))


def canonicalize_kraus(a: np.ndarray, rank_tol: float = RANK_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Polar split A = U P with P = sqrt(A^dagger A) and U an isometry on the support."""
    a = as_matrix(a)
    gram = dagger(a) @ a
    p = sqrt_psd(gram)
    pinv_sqrt, _ = inv_sqrt_on_support(gram, rank_tol)
    u = a @ pinv_sqrt
    return p, u


def choi_of(cp: CpMap) -> ChoiMatrix:
    """Choi matrix of a CP map, C = sum_k |phi_k><phi_k| with phi_k = vec(K_k^T)."""
    n = cp.in_dim * cp.out_dim
    c = np.zeros((n, n), dtype=np.complex128)
    for k in cp.kraus:
        phi = k.T.reshape(-1)
        c += np.outer(phi, phi.conj())
    return ChoiMatrix(cp.in_dim, cp.out_dim, c)


def map_of_choi(c: ChoiMatrix, kraus_tol: float = KRAUS_TOL) -> CpMap:
    """Kraus form of a Choi matrix, discarding eigenvalues below kraus_tol * max."""
    eig = hermitian_eig(c.matrix)
    w, v = eig.eigenvalues, eig.eigenvectors
    w_max = float(w[-1]) if w.size else 0.0
    if w.size and w[0] < -CHOI_PSD_TOL * max(1.0, w_max):
        raise NotPsd(f"Choi eigenvalue {w[0]:.3e}")
    kraus = []
    for j in range(w.size):
        if w_max > 0.0 and w[j] > kraus_tol * w_max:
            phi = np.sqrt(w[j]) * v[:, j]
            kraus.append(phi.reshape(c.in_dim, c.out_dim).T)
    if not kraus:
        kraus.append(np.zeros((c.out_dim, c.in_dim), dtype=np.complex128))
    return CpMap(c.in_dim, c.out_dim, tuple(kraus))


def choi_distance(a: ChoiMatrix, b: ChoiMatrix) -> float:
    if (a.in_dim, a.out_dim) != (b.in_dim, b.out_dim):
        raise DimensionMismatch("Choi matrices act between different spaces")
    return fnorm(a.matrix - b.matrix)


@lru_cache(maxsize=32)
def _diagonal_rotation(d: int) -> np.ndarray:
    """Orthogonal d x d matrix whose first row is the normalized all-ones vector."""
    seed = np.eye(d)
    seed[:, 0] = 1.0 / np.sqrt(d)
    q, _ = np.linalg.qr(seed)
    if q[0, 0] < 0:
        q = -q
    out = q.T.copy()
    out.setflags(write=False)  # cached and shared
    return out


def trace_affine_vector(m: np.ndarray) -> np.ndarray:
    """Coordinates of a trace-1 hermitian matrix in R^(d^2 - 1).

    Rotates the diagonal block of hermitian_to_vector so the first coordinate
    is proportional to the trace, then drops it; trace-1 matrices of a fixed
    dimension therefore live in a full-dimensional affine picture and the
    Caratheodory support bound comes out as d^2 rather than d^2 + 1.
    """
    d = m.shape[0]
    v = hermitian_to_vector(m)
    rotated = _diagonal_rotation(d) @ v[:d]
    return np.concatenate([rotated[1:], v[d:]])


def povm_weighted_points(elements: list[np.ndarray], dim: int) -> WeightedPointSet:
    """Barycentre picture of a POVM: points E_i / tr(E_i), weights tr(E_i) / d.

    The barycentre is the image of I/d (the zero vector in the reduced
    coordinates). Elements must be nonzero; completeness makes the weights a
    probability vector.
    """
    points = []
    weights = []
    for e in elements:
        tr = float(np.trace(e).real)
        if tr <= 0.0:
            raise ValueError("povm_weighted_points needs elements with positive trace")
        points.append(trace_affine_vector(e / tr))
        weights.append(tr / dim)
    return WeightedPointSet(np.array(points), np.array(weights))


def scalars_from_weights(
    elements: list[np.ndarray], dim: int, weights: np.ndarray
) -> np.ndarray:
    """Invert povm_weighted_points: scalars g_i with sum g_i E_i = I.

    Any weight vector over the same points with barycentre I/d maps back to
    per-element scalars g_i = w_i * d / tr(E_i).
    """
    traces = np.array([float(np.trace(e).real) for e in elements])
    return np.asarray(weights) * dim / traces
