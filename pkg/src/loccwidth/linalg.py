"""Dense complex linear algebra kernel.

Everything operates on plain ``numpy`` arrays (complex128, row-major); the
functions here are the only place the rest of the package touches an
eigensolver. Sized for desk-scale dimensions (local dims up to ~16, global
up to ~64).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NotHermitian, NotPsd

HERMITIAN_TOL = 1e-9
PSD_TOL = 1e-9
RANK_TOL = 1e-10


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return a.conj().T


def fnorm(a: np.ndarray) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(a))


def as_matrix(a) -> np.ndarray:
    """Coerce to a 2-D complex128 array, rejecting non-finite entries."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError("matrix has non-finite entries")
    return m


def hermiticity_defect(m: np.ndarray) -> float:
    """Relative deviation from M = M^dagger."""
    return fnorm(m - dagger(m)) / max(1.0, fnorm(m))


@dataclass(frozen=True)
class HermitianEigen:
    """Spectral decomposition M = V diag(w) V^dagger, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def hermitian_eig(m: np.ndarray, tol: float = HERMITIAN_TOL) -> HermitianEigen:
    """Eigendecomposition of a hermitian matrix.

    Raises NotHermitian when the input defect exceeds ``tol`` (relative to
    max(1, ||M||_F)), NoConvergence if the LAPACK iteration fails.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise NotHermitian(f"matrix is not square: {m.shape}")
    if hermiticity_defect(m) > tol:
        raise NotHermitian(f"hermiticity defect {hermiticity_defect(m):.3e} > {tol:.1e}")
    try:
        w, v = np.linalg.eigh((m + dagger(m)) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return HermitianEigen(eigenvalues=w, eigenvectors=v)


def sqrt_psd(m: np.ndarray, psd_tol: float = PSD_TOL, floor_tol: float = 1e-12) -> np.ndarray:
    """Principal square root of a PSD matrix.

    Eigenvalues in (-psd_tol, 0) are clamped to zero; anything below raises
    NotPsd (tolerance scaled by max(1, largest eigenvalue)). Eigenvalues
    under floor_tol * max are rounding noise whose square roots would be
    sqrt(eps)-sized, so they are floored to exact zeros; the reconstruction
    error this adds is floor_tol * max, far inside the 1e-9 contract.
    """
    eig = hermitian_eig(m)
    w, v = eig.eigenvalues, eig.eigenvectors
    scale = max(1.0, float(w[-1]) if w.size else 1.0)
    if w.size and w[0] < -psd_tol * scale:
        raise NotPsd(f"eigenvalue {w[0]:.3e} below -{psd_tol:.1e}")
    w_max = float(w[-1]) if w.size else 0.0
    w = np.where(w < floor_tol * max(w_max, 0.0), 0.0, w)
    return (v * np.sqrt(w)) @ dagger(v)


def inv_sqrt_on_support(
    m: np.ndarray, rank_tol: float = RANK_TOL, psd_tol: float = PSD_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Pseudo-inverse square root of a PSD matrix plus its null projector.

    Returns (S, N) with S = sum_{w_j > rank_tol * w_max} w_j^{-1/2} |v_j><v_j|
    and N the projector onto the complementary span, so S M S is the support
    projector and S + N has full rank.
    """
    eig = hermitian_eig(m)
    w, v = eig.eigenvalues, eig.eigenvectors
    scale = max(1.0, float(w[-1]) if w.size else 1.0)
    if w.size and w[0] < -psd_tol * scale:
        raise NotPsd(f"eigenvalue {w[0]:.3e} below -{psd_tol:.1e}")
    w_max = float(w[-1]) if w.size else 0.0
    on_support = w > rank_tol * max(w_max, 0.0) if w_max > 0.0 else np.zeros_like(w, dtype=bool)
    vs = v[:, on_support]
    vn = v[:, ~on_support]
    pinv_sqrt = (vs / np.sqrt(w[on_support])) @ dagger(vs) if vs.shape[1] else np.zeros_like(m)
    null_proj = vn @ dagger(vn) if vn.shape[1] else np.zeros_like(m)
    return pinv_sqrt, null_proj


def support_projector(m: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Projector onto the range of a PSD matrix."""
    pinv_sqrt, null_proj = inv_sqrt_on_support(m, rank_tol)
    return np.eye(m.shape[0], dtype=np.complex128) - null_proj


def real_null_vector(a: np.ndarray, tol: float = 1e-12) -> np.ndarray | None:
    """Unit vector z with ||A z|| <= tol * ||A||, or None at full column rank.

    ||A|| is the spectral norm. A zero matrix returns the first basis vector.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a 2-D real matrix")
    cols = a.shape[1]
    if cols == 0:
        return None
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    s_max = float(s[0]) if s.size else 0.0
    if s_max == 0.0:
        z = np.zeros(cols)
        z[0] = 1.0
        return z
    s_min = float(s[-1]) if s.size == cols else 0.0  # wide matrix: exact nullity
    if s_min > tol * s_max:
        return None
    return vt[-1]
