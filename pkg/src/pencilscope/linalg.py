"""Dense complex linear algebra kernels for desk-scale matrices.

Hermitian eigendecomposition (cyclic Jacobi), determinants, inertia and
general eigenvalues (Faddeev-LeVerrier characteristic polynomial plus
Durand-Kerner root iteration), with multiplicity clustering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergenceError, NotHermitianError
from .tolerances import Tolerances, resolve

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class HermitianEigen:
    """Eigenvalues ascending; eigenvectors are the columns of ``eigenvectors``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __iter__(self):
        yield self.eigenvalues
        yield self.eigenvectors


@dataclass(frozen=True)
class Inertia:
    n_plus: int
    n_minus: int
    n_zero: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.n_plus, self.n_minus, self.n_zero)


def as_matrix(A, name: str = "A") -> np.ndarray:
    """Convert to a finite square complex array."""
    M = np.array(A, dtype=complex)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def is_hermitian(A, rel_tol: float = 1e-12) -> bool:
    M = np.asarray(A, dtype=complex)
    scale = np.linalg.norm(M)
    return bool(np.linalg.norm(M - M.conj().T) <= rel_tol * scale)


def check_hermitian(A, name: str = "A", rel_tol: float = 1e-12) -> np.ndarray:
    M = as_matrix(A, name)
    if not is_hermitian(M, rel_tol):
        raise NotHermitianError(f"{name} is not Hermitian", field=name)
    return M


def normalize_phase(V: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive.

    Near-ties are broken toward the lowest index so the choice is stable.
    """
    V = np.array(V, dtype=complex)
    mags = np.abs(V)
    top = mags.max(axis=-2, keepdims=True)
    pick = np.argmax(mags >= top * (1 - 1e-9), axis=-2)
    lead = np.take_along_axis(V, pick[..., None, :], axis=-2)
    phase = lead / np.where(np.abs(lead) > 0, np.abs(lead), 1.0)
    phase = np.where(np.abs(lead) > 0, phase, 1.0)
    return V / phase


def hermitian_eigen(A, tol: Tolerances | None = None) -> HermitianEigen:
    """Cyclic Jacobi eigendecomposition of a Hermitian matrix.

    Each rotation removes the phase of the pivot entry and then applies a
    real Jacobi rotation, so the accumulated transform stays unitary.
    """
    tol = resolve(tol)
    A = check_hermitian(A, rel_tol=tol.hermitian_rel)
    n = A.shape[0]
    A = 0.5 * (A + A.conj().T)
    V = np.eye(n, dtype=complex)
    scale = np.linalg.norm(A)
    threshold = tol.jacobi_offdiag_rel * scale

    def off_norm(M):
        return np.linalg.norm(M - np.diag(np.diag(M)))

    sweeps = 0
    while off_norm(A) > threshold:
        if sweeps >= tol.jacobi_max_sweeps:
            raise NoConvergenceError("Jacobi sweep cap exceeded", sweeps=sweeps)
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = A[p, q]
                ab = abs(b)
                if ab <= 1e-300:
                    continue
                a_pp = A[p, p].real
                a_qq = A[q, q].real
                theta = (a_qq - a_pp) / (2.0 * ab)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ph = b / ab
                # Columns p, q of U: U = diag(1, conj(ph)) @ [[c, s], [-s, c]].
                u_pp, u_pq = c, s
                u_qp, u_qq = -s * np.conj(ph), c * np.conj(ph)
                cols = A[:, [p, q]].copy()
                A[:, p] = cols[:, 0] * u_pp + cols[:, 1] * u_qp
                A[:, q] = cols[:, 0] * u_pq + cols[:, 1] * u_qq
                rows = A[[p, q], :].copy()
                A[p, :] = np.conj(u_pp) * rows[0] + np.conj(u_qp) * rows[1]
                A[q, :] = np.conj(u_pq) * rows[0] + np.conj(u_qq) * rows[1]
                A[p, q] = 0.0
                A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                vcols = V[:, [p, q]].copy()
                V[:, p] = vcols[:, 0] * u_pp + vcols[:, 1] * u_qp
                V[:, q] = vcols[:, 0] * u_pq + vcols[:, 1] * u_qq

    w = np.diag(A).real.copy()
    order = np.argsort(w, kind="stable")
    return HermitianEigen(w[order], normalize_phase(V[:, order]))


def hermitian_eigen_batch(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched LAPACK eigendecomposition of Hermitian matrices ``stack[..., N, N]``.

    Used on dense sampling grids where a Python-level Jacobi loop per point
    would dominate runtime. Eigenvector phases are normalized.
    """
    stack = np.asarray(stack, dtype=complex)
    stack = 0.5 * (stack + np.conj(np.swapaxes(stack, -1, -2)))
    w, V = np.linalg.eigh(stack)
    return w, normalize_phase(V)


def complex_det(A) -> complex:
    """Determinant by LU factorization with partial pivoting."""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("complex_det needs a square matrix")
    if M.shape[0] == 0:
        return 1.0 + 0.0j
    return complex(np.linalg.det(M))


def spectral_norm(A) -> float:
    M = np.asarray(A, dtype=complex)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def inertia(A, zero_tol: float | None = None, tol: Tolerances | None = None) -> Inertia:
    """Counts of eigenvalues above ``zero_tol``, below ``-zero_tol`` and in between."""
    tol = resolve(tol)
    M = check_hermitian(A, rel_tol=tol.hermitian_rel)
    if M.shape[0] == 0:
        return Inertia(0, 0, 0)
    w = hermitian_eigen(M, tol).eigenvalues
    if zero_tol is None:
        zero_tol = tol.inertia_rel * float(np.max(np.abs(w)))
    elif zero_tol <= 0:
        raise ValueError("zero_tol must be positive")
    n_plus = int(np.sum(w > zero_tol))
    n_minus = int(np.sum(w < -zero_tol))
    return Inertia(n_plus, n_minus, len(w) - n_plus - n_minus)


def charpoly(A) -> np.ndarray:
    """Coefficients c_0..c_n (ascending) of det(zI - A) by Faddeev-LeVerrier."""
    M = np.asarray(A, dtype=complex)
    n = M.shape[0]
    c = np.zeros(n + 1, dtype=complex)
    c[n] = 1.0
    Mk = np.zeros_like(M)
    eye = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        Mk = M @ Mk + c[n - k + 1] * eye
        c[n - k] = -np.trace(M @ Mk) / k
    return c


def durand_kerner(coeffs, max_iter: int = 20000) -> np.ndarray:
    """All roots of the polynomial with ascending coefficients ``coeffs``.

    Simultaneous Weierstrass iteration. Multiple roots converge linearly and
    end up scattered by roughly eps**(1/m); callers cluster the result.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    n = len(c) - 1
    if n < 1:
        return np.zeros(0, dtype=complex)
    c = c / c[-1]
    radius = 1.0 + float(np.max(np.abs(c[:-1])))
    z = radius * (0.4 + 0.9j) ** np.arange(n)
    horner = c[::-1]
    best = None
    stalled = 0
    for _ in range(max_iter):
        pz = np.polyval(horner, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        denom = np.prod(diff, axis=1)
        step = pz / denom
        z = z - step
        size = float(np.max(np.abs(step) / (1.0 + np.abs(z))))
        if size <= 4 * EPS:
            break
        if best is None or size < 0.5 * best:
            best = size
            stalled = 0
        else:
            stalled += 1
            # Linear convergence near multiple roots bottoms out at the noise floor.
            if stalled > 200 and size < 1e-4:
                break
    backward = np.abs(np.polyval(horner, z))
    bound = np.polyval(np.abs(horner), np.abs(z))
    if np.any(backward > 1e-6 * bound):
        raise NoConvergenceError("Durand-Kerner iteration did not converge")
    return z


def cluster_values(values, rel_tol: float = 1e-7) -> list[tuple[complex, int]]:
    """Group nearly equal complex values into (centroid, count) pairs.

    A multiple root perturbed at relative level eps spreads over roughly
    eps**(1/m), so a group of m values is accepted when its spread is below
    ``max(rel_tol, min(10 * (64 eps)**(1/m), 1e-2))`` times ``1 + |centroid|``
    and every other value lies at least five spreads away. Groups are formed
    from each value's nearest neighbours, tightest (relative to its own limit)
    first.
    """
    vals = np.asarray(values, dtype=complex).ravel()
    remaining = list(range(len(vals)))
    groups: list[list[int]] = []

    def ratio(order, k):
        members = vals[order[:k]]
        c = members.mean()
        spread = float(np.max(np.abs(members - c)))
        adaptive = min(10.0 * (64 * EPS) ** (1.0 / k), 1e-2)
        limit = (1.0 + abs(c)) * max(rel_tol, adaptive)
        if k < len(order):
            gap = float(np.min(np.abs(vals[order[k:]] - c)))
            if gap < 5.0 * spread:
                return np.inf
        return spread / limit

    while len(remaining) > 1:
        best = None
        pool = np.array(remaining)
        for seed in remaining:
            order = pool[np.argsort(np.abs(vals[pool] - vals[seed]), kind="stable")]
            for k in range(2, len(order) + 1):
                r = ratio(order, k)
                if r <= 1.0 and (best is None or r < best[0]):
                    best = (r, sorted(order[:k].tolist()))
        if best is None:
            break
        groups.append(best[1])
        remaining = [i for i in remaining if i not in best[1]]
    groups.extend([i] for i in remaining)

    out = [(complex(vals[g].mean()), len(g)) for g in groups]
    out.sort(key=lambda cm: (round(cm[0].real, 9), round(cm[0].imag, 9)))
    return out


def _weierstrass_det(M: np.ndarray, max_iter: int = 5000) -> np.ndarray:
    """Durand-Kerner iteration on det(zI - M), evaluated by pivoted LU.

    The characteristic polynomial is never expanded into coefficients, which
    keeps the iteration backward stable for N up to a few dozen.
    """
    n = M.shape[0]
    eye = np.eye(n, dtype=complex)
    radius = 1.0 + float(np.max(np.sum(np.abs(M), axis=1)))
    z = 0.5 * radius * (0.4 + 0.9j) ** np.arange(n)
    stalled = 0
    best = np.inf
    for _ in range(max_iter):
        fz = np.linalg.det(z[:, None, None] * eye - M)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        step = fz / np.prod(diff, axis=1)
        z = z - step
        size = float(np.max(np.abs(step) / (1.0 + np.abs(z))))
        if size <= 4 * EPS:
            return z
        if size < best:
            best = size
            stalled = 0
        else:
            stalled += 1
            # Multiple roots converge linearly down to a noise floor, then wander.
            if stalled > 50 and best < 1e-3:
                return z
    raise NoConvergenceError("Durand-Kerner iteration did not converge")


def general_eigenvalues(
    A, cluster_tol: float | None = None, tol: Tolerances | None = None
) -> list[tuple[complex, int]]:
    """Eigenvalues with algebraic multiplicities of a general complex matrix.

    The matrix is scaled to unit max-entry before iterating so the determinant
    stays representable.
    """
    tol = resolve(tol)
    M = as_matrix(A)
    n = M.shape[0]
    if n == 0:
        return []
    scale = float(np.max(np.abs(M)))
    if scale == 0.0:
        return [(0j, n)]
    roots = _weierstrass_det(M / scale) * scale
    rel = tol.cluster_rel if cluster_tol is None else cluster_tol
    return cluster_values(roots, rel)


def expand_multiplicities(pairs) -> np.ndarray:
    return np.array([v for v, m in pairs for _ in range(m)], dtype=complex)


def orthonormal_basis(M, rel_tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis for the column space of ``M`` by SVD."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    return U[:, s > rel_tol * s[0]]


def principal_angles(X, Y) -> np.ndarray:
    """Principal angles (radians, ascending) between column spans of X and Y."""
    QX = orthonormal_basis(X)
    QY = orthonormal_basis(Y)
    if QX.shape[1] == 0 or QY.shape[1] == 0:
        return np.zeros(0)
    # arccos of the cosines loses accuracy near 0; use sines of the residual.
    k = min(QX.shape[1], QY.shape[1])
    small, large = (QX, QY) if QX.shape[1] <= QY.shape[1] else (QY, QX)
    resid = small - large @ (large.conj().T @ small)
    sines = np.linalg.svd(resid, compute_uv=False)[:k]
    sines = np.sort(np.clip(sines, 0.0, 1.0))
    return np.arcsin(sines)
