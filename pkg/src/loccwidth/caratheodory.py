"""Barycentre-preserving convex support reduction and mixture peeling.

Given points v_i in R^n with a probability weight vector, ``reduce_support``
rewrites the weights so at most n+1 stay positive while the barycentre
sum_i p_i v_i is unchanged, and ``peel_decompose`` splits the weight vector
into a convex combination of such small-support vectors. Both run the
classical constructive elimination step: find z with sum z_i = 0 and
sum z_i v_i = 0 on the current support, then move weights along z until one
hits zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotHermitian, NumericalDegeneracy
from .linalg import dagger, fnorm, real_null_vector

WEIGHT_SUM_TOL = 1e-10
NULL_TOL = 1e-10
ZERO_WEIGHT = 1e-12


@dataclass(frozen=True)
class WeightedPointSet:
    """Points in R^dim with nonnegative weights summing to one."""

    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        w = np.asarray(self.weights, dtype=np.float64)
        if pts.shape[0] != w.shape[0]:
            raise ValueError(f"{pts.shape[0]} points but {w.shape[0]} weights")
        if w.size == 0:
            raise ValueError("empty point set")
        if w.min() < -ZERO_WEIGHT:
            raise ValueError(f"negative weight {w.min():.3e}")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {w.sum():.12f}, not 1")
        w = np.clip(w, 0.0, None)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def support(self) -> np.ndarray:
        """Indices with strictly positive weight."""
        return np.flatnonzero(self.weights > 0.0)


def barycentre(s: WeightedPointSet) -> np.ndarray:
    """sum_i p_i v_i."""
    return s.weights @ s.points


def _eliminate_once(points: np.ndarray, weights: np.ndarray, null_tol: float) -> bool:
    """One affine-dependency elimination step, in place on ``weights``.

    Returns False when the support points are affinely independent at the
    tolerance (nothing to eliminate).
    """
    supp = np.flatnonzero(weights > 0.0)
    pts = points[supp]
    rows = np.vstack([(pts - pts[0]).T, np.ones((1, supp.size))])
    z = real_null_vector(rows, null_tol)
    if z is None:
        return False
    if z.max() <= 0.0:
        z = -z
    q = weights[supp]
    pos = z > 1e-14 * np.abs(z).max()
    t_star = np.min(q[pos] / z[pos])
    q = q - t_star * z
    q[q <= ZERO_WEIGHT] = 0.0  # zero every weight that hit the floor
    total = q.sum()
    if total <= 0.0:
        raise NumericalDegeneracy("elimination step annihilated all weight")
    weights[supp] = q / total
    return True


def reduce_support(s: WeightedPointSet, null_tol: float = NULL_TOL) -> WeightedPointSet:
    """Same barycentre, same point list, at most dim+1 positive weights.

    Elimination keeps running until the support points are affinely
    independent, so the result lands below dim+1 whenever the points live in
    a lower-dimensional affine subspace (all-equal points reduce to a single
    one, trace-normalized POVM elements stop one earlier, instruments shed
    their trace-preservation dimensions).
    """
    weights = s.weights.copy()
    while True:
        supp_size = int(np.count_nonzero(weights > 0.0))
        if supp_size <= 1:
            break
        if not _eliminate_once(s.points, weights, null_tol):
            if supp_size > s.dim + 1:
                raise NumericalDegeneracy(
                    f"no affine dependency found at support {supp_size} > dim+1 = {s.dim + 1}"
                )
            break
    return WeightedPointSet(s.points, weights)


def peel_decompose(
    s: WeightedPointSet, null_tol: float = NULL_TOL
) -> list[tuple[float, WeightedPointSet]]:
    """Convex split of the weights into small-support members.

    Returns pairs (c_j, sub_j) with c_j > 0 summing to one, every sub_j a
    WeightedPointSet over the same points with the same barycentre and at
    most dim+1 positive weights, and sum_j c_j * sub_j.weights equal to the
    input weights. Peels the reduce_support member of the current residual
    with the largest feasible coefficient, so each round strictly shrinks
    the residual support.
    """
    components: list[tuple[float, WeightedPointSet]] = []
    q = s.weights.copy()
    scale = 1.0
    while True:
        supp = np.flatnonzero(q > 0.0)
        if supp.size <= s.dim + 1:
            components.append((scale, WeightedPointSet(s.points, q)))
            break
        r = reduce_support(WeightedPointSet(s.points, q), null_tol).weights
        r_supp = np.flatnonzero(r > 0.0)
        t = float(np.min(q[r_supp] / r[r_supp]))
        if t >= 1.0 - 1e-12:
            components.append((scale, WeightedPointSet(s.points, r)))
            break
        components.append((scale * t, WeightedPointSet(s.points, r)))
        q = (q - t * r) / (1.0 - t)
        q[q <= ZERO_WEIGHT] = 0.0
        q /= q.sum()
        scale *= 1.0 - t
    return components


def hermitian_to_vector(m: np.ndarray, d: int | None = None) -> np.ndarray:
    """Isometric real parametrization of a d x d hermitian matrix.

    Layout: the d diagonal entries, then sqrt(2)*Re and sqrt(2)*Im of the
    strict upper triangle in row-major order, giving a vector of length d^2
    with the same Euclidean norm as the Frobenius norm of the matrix.
    """
    m = np.asarray(m, dtype=np.complex128)
    n = m.shape[0]
    if d is not None and d != n:
        raise ValueError(f"declared dimension {d} but matrix is {n}x{n}")
    if m.shape != (n, n) or fnorm(m - dagger(m)) > 1e-9 * max(1.0, fnorm(m)):
        raise NotHermitian("hermitian_to_vector needs a hermitian matrix")
    iu, ju = np.triu_indices(n, k=1)
    upper = m[iu, ju]
    return np.concatenate(
        [m.diagonal().real, np.sqrt(2.0) * upper.real, np.sqrt(2.0) * upper.imag]
    )


def vector_to_hermitian(v: np.ndarray, d: int) -> np.ndarray:
    """Inverse of hermitian_to_vector."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (d * d,):
        raise ValueError(f"expected length {d * d}, got {v.shape}")
    m = np.zeros((d, d), dtype=np.complex128)
    np.fill_diagonal(m, v[:d])
    iu, ju = np.triu_indices(d, k=1)
    k = iu.size
    upper = (v[d : d + k] + 1j * v[d + k :]) / np.sqrt(2.0)
    m[iu, ju] = upper
    m[ju, iu] = upper.conj()
    return m
