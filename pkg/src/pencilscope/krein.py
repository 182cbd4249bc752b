"""Krein indices: graphical (from branch crossings) and algebraic (Gram matrices
of root-vector chains in the indefinite Hankel form), plus root chains.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .branches import LocalCrossing, analyze_crossing
from .errors import (
    DegenerateGramError,
    FlagDegenerateError,
    OrderUndeterminedError,
    SingularLeadingCoefficientError,
)
from .linalg import inertia, normalize_phase, orthonormal_basis, spectral_norm
from .pencil import MatrixPencil, PolynomialPencil, hankel_form, leading_is_invertible
from .tolerances import Tolerances, resolve


def graphical_indices(m: int, eta: int) -> tuple[int, int]:
    """(κ⁺_g, κ⁻_g) of a branch vanishing to order m with leading sign η."""
    if m < 1 or eta not in (1, -1):
        raise ValueError("need m >= 1 and eta in {+1, -1}")
    if m % 2 == 0:
        return m // 2, m // 2
    return (m + eta) // 2, (m - eta) // 2


@dataclass(frozen=True)
class BranchSignature:
    order: int
    sign: int
    kappa_plus: int
    kappa_minus: int

    @property
    def kappa(self) -> int:
        return self.kappa_plus - self.kappa_minus


@dataclass(frozen=True)
class KreinReport:
    lam0: float
    branches: tuple

    @property
    def kappa_plus(self) -> int:
        return sum(b.kappa_plus for b in self.branches)

    @property
    def kappa_minus(self) -> int:
        return sum(b.kappa_minus for b in self.branches)

    @property
    def kappa(self) -> int:
        return self.kappa_plus - self.kappa_minus

    @property
    def alpha(self) -> int:
        return sum(b.order for b in self.branches)


def report_from_local(local: LocalCrossing) -> KreinReport:
    rows = []
    for b in local.branches:
        kp, km = graphical_indices(b.order, b.sign)
        rows.append(BranchSignature(b.order, b.sign, kp, km))
    return KreinReport(local.lam0, tuple(rows))


def value_signature(pencil: MatrixPencil, lam0: float, tol: Tolerances | None = None) -> KreinReport:
    """Graphical Krein indices summed over the branches vanishing at ``lam0``."""
    local = analyze_crossing(pencil, lam0, tol=tol)
    if local is None:
        raise OrderUndeterminedError(f"no branch vanishes at lambda={lam0:.12g}")
    return report_from_local(local)


# ---------------------------------------------------------------------------
# root chains


@dataclass(frozen=True)
class RootChain:
    """Chain u^[0..m-1] stored as the columns of ``vectors``."""

    lam0: float
    vectors: np.ndarray = field(repr=False)
    residual: float = 0.0

    @property
    def length(self) -> int:
        return self.vectors.shape[1]

    @property
    def starter(self) -> np.ndarray:
        return self.vectors[:, 0]


@dataclass(frozen=True)
class CanonicalChainSet:
    lam0: float
    chains: tuple
    flags: dict = field(default_factory=dict, repr=False)

    @property
    def lengths(self) -> list[int]:
        return [c.length for c in self.chains]

    @property
    def algebraic_multiplicity(self) -> int:
        return sum(self.lengths)

    def flag(self, s: int) -> np.ndarray:
        """Orthonormal basis of the flag subspace of starters of chains of length >= s."""
        if s in self.flags:
            return self.flags[s]
        cols = [c.starter for c in self.chains if c.length >= s]
        if not cols:
            return np.zeros((self.chains[0].vectors.shape[0] if self.chains else 0, 0), dtype=complex)
        return orthonormal_basis(np.column_stack(cols))


def chain_residuals(pencil: MatrixPencil, lam0: float, vectors: np.ndarray) -> np.ndarray:
    """‖Σ_l T_l u^[q-l]‖ for q = 0..m-1, with T_l the Taylor coefficients at λ₀,
    relative to ‖u^[0]‖ and the pencil scale."""
    U = np.asarray(vectors, dtype=complex)
    m = U.shape[1]
    T = pencil.taylor(lam0, m)
    ref = np.linalg.norm(U[:, 0]) * max(pencil.scale(lam0), 1e-300)
    out = []
    for q in range(m):
        acc = sum(T[ell] @ U[:, q - ell] for ell in range(q + 1))
        out.append(np.linalg.norm(acc) / ref)
    return np.array(out)


def _stacked(T: list[np.ndarray], s: int) -> np.ndarray:
    n = T[0].shape[0]
    A = np.zeros((s * n, s * n), dtype=complex)
    for q in range(s):
        for r in range(q + 1):
            A[q * n:(q + 1) * n, r * n:(r + 1) * n] = T[q - r]
    return A


def _kernel(A: np.ndarray, ref: float, rank_tol: float) -> tuple[np.ndarray, np.ndarray]:
    _, s, Vh = np.linalg.svd(A)
    cut = rank_tol * ref
    return Vh[s <= cut].conj().T, s


def _check_margin(s: np.ndarray, ref: float, rank_tol: float, what: str) -> None:
    lo, hi = rank_tol * ref / 10.0, rank_tol * ref * 10.0
    bad = s[(s > lo) & (s < hi)]
    if bad.size:
        raise FlagDegenerateError(
            f"{what}: singular value {bad[0]:.3g} within 10x of the rank threshold {rank_tol * ref:.3g}"
        )


def root_chains(pencil: MatrixPencil, lam0: float, tol: Tolerances | None = None) -> CanonicalChainSet:
    """Canonical set of maximal root chains at ``lam0``.

    X_s (starters of chains of length >= s) is the projection onto the first
    block of the kernel of the block-Toeplitz system of Taylor coefficients of
    size s. Starters are chosen greedily from X_s minus the span already
    chosen, longest chains first; each chain is completed by a joint
    minimum-norm least-squares solve.
    """
    tol = resolve(tol)
    n = pencil.dimension
    ref = max(pencil.scale(lam0), 1e-300)
    rank_tol = tol.rank_tol
    limit = n * (pencil.degree if isinstance(pencil, PolynomialPencil) else 8) + 1
    T = pencil.taylor(lam0, limit + 1)
    flags: dict[int, np.ndarray] = {}
    s = 1
    while s <= limit:
        K, sv = _kernel(_stacked(T, s), ref, rank_tol)
        _check_margin(sv, ref, rank_tol, f"kernel of the length-{s} chain system")
        if K.shape[1] == 0:
            break
        first = K[:n]
        U, fs, _ = np.linalg.svd(first, full_matrices=False)
        _check_margin(fs[fs < 0.5], 1.0, rank_tol, f"starter space X_{s}")
        basis = U[:, fs > rank_tol]
        if basis.shape[1] == 0:
            break
        flags[s] = basis
        s += 1
    if not flags:
        return CanonicalChainSet(float(lam0), (), {})

    chosen: list[tuple[np.ndarray, int]] = []
    for length in range(max(flags), 0, -1):
        Q = flags[length]
        if chosen:
            C = orthonormal_basis(np.column_stack([u for u, _ in chosen]))
            R = Q - C @ (C.conj().T @ Q)
        else:
            R = Q
        U, rs, _ = np.linalg.svd(R, full_matrices=False)
        for col in range(int(np.sum(rs > 1e-6))):
            chosen.append((normalize_phase(U[:, col:col + 1])[:, 0], length))

    chains = []
    for u0, length in chosen:
        vectors = _complete_chain(T, u0, length, n)
        res = float(np.max(chain_residuals(pencil, lam0, vectors)))
        chains.append(RootChain(float(lam0), vectors, res))
    return CanonicalChainSet(float(lam0), tuple(chains), flags)


def _complete_chain(T, u0: np.ndarray, length: int, n: int) -> np.ndarray:
    if length == 1:
        return u0[:, None].astype(complex)
    A = _stacked(T, length)[n:, n:]
    rhs = -np.concatenate([T[q] @ u0 for q in range(1, length)])
    y, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return np.column_stack([u0] + [y[i * n:(i + 1) * n] for i in range(length - 1)])


# ---------------------------------------------------------------------------
# Gram-matrix indices


@dataclass(frozen=True)
class GramIndices:
    per_chain: tuple
    kappa_plus: int
    kappa_minus: int
    gram: np.ndarray = field(repr=False)

    @property
    def kappa(self) -> int:
        return self.kappa_plus - self.kappa_minus


def lift_chain(pencil: PolynomialPencil, lam0: float, vectors: np.ndarray) -> np.ndarray:
    """Columns (U J0^i)_j stacked over i = 0..p-1: the companion Jordan chain."""
    U = np.asarray(vectors, dtype=complex)
    m = U.shape[1]
    J0 = lam0 * np.eye(m) + np.eye(m, k=1)
    blocks = []
    cur = U.copy()
    for _ in range(pencil.degree):
        blocks.append(cur)
        cur = cur @ J0
    return np.vstack(blocks)


def gram_indices(
    pencil: PolynomialPencil, lam0: float, chains: CanonicalChainSet, tol: Tolerances | None = None
) -> GramIndices:
    """Inertia of the Gram matrices of lifted chains in the form (x, B y)."""
    tol = resolve(tol)
    if not isinstance(pencil, PolynomialPencil):
        raise TypeError("gram_indices needs a polynomial pencil")
    if not leading_is_invertible(pencil, tol):
        raise SingularLeadingCoefficientError("leading coefficient is singular")
    B = hankel_form(pencil)
    lifted = [lift_chain(pencil, lam0, c.vectors) for c in chains.chains]
    if not lifted:
        return GramIndices((), 0, 0, np.zeros((0, 0)))
    V = np.hstack(lifted)
    G = V.conj().T @ B @ V
    G = 0.5 * (G + G.conj().T)
    band = tol.rank_tol * spectral_norm(B) * spectral_norm(V) ** 2
    w = np.linalg.eigvalsh(G)
    if np.any(np.abs(w) <= band):
        raise DegenerateGramError(f"Gram matrix eigenvalue {w[np.argmin(np.abs(w))]:.3g} within band {band:.3g}")
    total = inertia(G, zero_tol=band)
    per_chain = []
    for Vc in lifted:
        Gc = Vc.conj().T @ B @ Vc
        Gc = 0.5 * (Gc + Gc.conj().T)
        per_chain.append(inertia(Gc, zero_tol=band).as_tuple())
    return GramIndices(tuple(per_chain), total.n_plus, total.n_minus, G)


# ---------------------------------------------------------------------------
# chains from branch derivatives


def chains_from_branch_derivatives(
    pencil: MatrixPencil, lam0: float, tol: Tolerances | None = None, local: LocalCrossing | None = None
) -> CanonicalChainSet:
    """Chains built from derivatives of analytic eigenvector branches.

    For a branch of order m with eigenvector family u(λ), taking w^[0] = u(λ₀)
    and w^[s] = 0 for s >= 1 gives u^[r] = u^{(r)}(λ₀)/r!, r < m. The flag
    Y_s is spanned by u_j(λ₀) over branches with m_j >= s.
    """
    tol = resolve(tol)
    if local is None:
        local = analyze_crossing(pencil, lam0, tol=tol)
    if local is None:
        raise OrderUndeterminedError(f"no branch vanishes at lambda={lam0:.12g}")
    chains = []
    for b in local.branches:
        cols = [np.asarray(b.vector_derivatives[r]) / factorial(r) for r in range(b.order)]
        vectors = np.column_stack(cols)
        res = float(np.max(chain_residuals(pencil, local.lam0, vectors)))
        chains.append(RootChain(local.lam0, vectors, res))
    chains.sort(key=lambda c: -c.length)
    flags = {}
    for s in range(1, max(c.length for c in chains) + 1):
        flags[s] = orthonormal_basis(np.column_stack([c.starter for c in chains if c.length >= s]))
    return CanonicalChainSet(local.lam0, tuple(chains), flags)
