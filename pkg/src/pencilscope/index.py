"""Inertia-style counts and index theorems: the graphical conservation law for
odd-degree pencils, the unstable-eigenvalue count of a linearized Hamiltonian,
its full-symmetry form, and the canonical-form lower bound on real spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .branches import CrossingEvent, analyze_crossing, default_window, find_crossings, sample_branches
from .errors import InconsistentError, KernelsNotOrthogonalError, SingularLeadingCoefficientError
from .krein import graphical_indices
from .linalg import general_eigenvalues, inertia, spectral_norm
from .pencil import (
    CanonicalHamiltonian,
    HamiltonianSystem,
    MatrixPencil,
    PolynomialPencil,
    leading_is_invertible,
    pencil_from_hamiltonian,
    require_real,
)
from .tolerances import Tolerances, resolve


@dataclass(frozen=True)
class ZCounts:
    down_plus: int = 0
    down_minus: int = 0
    up_plus: int = 0
    up_minus: int = 0
    plus: int = 0
    minus: int = 0

    def as_tuple(self) -> tuple[int, ...]:
        return (self.down_plus, self.down_minus, self.up_plus, self.up_minus, self.plus, self.minus)


def z_counts_from_branches(branches) -> ZCounts:
    """Classify (order, sign) pairs of branches through (0, 0).

    A branch is "down" on the right when η < 0 and on the left when η(−1)^m < 0.
    """
    dp = dm = up = um = zp = zm = 0
    for m, eta in branches:
        right = eta
        left = eta * (-1) ** m
        dp += right < 0
        up += right > 0
        dm += left < 0
        um += left > 0
        zp += eta > 0
        zm += eta < 0
    return ZCounts(dp, dm, up, um, zp, zm)


def z_counts(pencil: MatrixPencil, tol: Tolerances | None = None) -> ZCounts:
    """Counts of eigenvalue branches through (λ, μ) = (0, 0) by their local shape."""
    local = analyze_crossing(pencil, 0.0, refine=False, tol=tol)
    if local is None:
        return ZCounts()
    return z_counts_from_branches((b.order, b.sign) for b in local.branches)


@dataclass(frozen=True)
class CrossingSummary:
    """Real characteristic values with their graphical Krein indices."""

    lam: tuple
    k: tuple
    kappa_plus: tuple
    kappa_minus: tuple

    def _select(self, positive: bool, values) -> int:
        return int(sum(v for lam, v in zip(self.lam, values) if (lam > 0) == positive and lam != 0.0))

    def kappa_sum(self, positive: bool) -> int:
        return self._select(positive, np.subtract(self.kappa_plus, self.kappa_minus))

    def kappa_plus_sum(self, positive: bool) -> int:
        return self._select(positive, self.kappa_plus)

    def kappa_minus_sum(self, positive: bool) -> int:
        return self._select(positive, self.kappa_minus)

    def count(self, positive: bool) -> int:
        """Characteristic values of one sign counted with geometric multiplicity."""
        return self._select(positive, self.k)


def summarize_crossings(events: list[CrossingEvent], zero_tol: float) -> CrossingSummary:
    lam, k, kp, km = [], [], [], []
    for ev in events:
        p = m = 0
        for order, sign in zip(ev.orders, ev.signs):
            a, b = graphical_indices(order, sign)
            p += a
            m += b
        lam.append(0.0 if abs(ev.lam0) <= zero_tol else float(ev.lam0))
        k.append(ev.k)
        kp.append(p)
        km.append(m)
    return CrossingSummary(tuple(lam), tuple(k), tuple(kp), tuple(km))


def real_crossings(pencil: MatrixPencil, steps: int = 400, tol: Tolerances | None = None) -> CrossingSummary:
    tol = resolve(tol)
    lo, hi = default_window(pencil)
    family = sample_branches(pencil, lo, hi, steps, tol)
    events = find_crossings(pencil, family, tol)
    return summarize_crossings(events, tol.cluster_rel)


@dataclass(frozen=True)
class ConservationReport:
    N: int
    n_minus_L0: int
    n_plus_Lp: int
    n_minus_Lp: int
    z: ZCounts
    kappa_positive: int
    kappa_negative: int
    n_positive: int
    n_negative: int
    residual: int

    @property
    def inequality_plus(self) -> bool:
        return self.n_positive >= abs(self.n_minus_L0 + self.z.down_plus - self.n_minus_Lp)

    @property
    def inequality_minus(self) -> bool:
        return self.n_negative >= abs(self.n_minus_L0 + self.z.down_minus - self.n_plus_Lp)

    @property
    def inequality_holds(self) -> bool:
        return self.inequality_plus and self.inequality_minus


def conservation_check(
    pencil: PolynomialPencil, tol: Tolerances | None = None, steps: int = 400
) -> ConservationReport:
    """Integer residual N − 2N₋(L₀) − Z⁺↓ − Z⁻↓ + Σ_{λ>0}κ − Σ_{λ<0}κ, plus the inequalities."""
    tol = resolve(tol)
    if not isinstance(pencil, PolynomialPencil) or pencil.degree % 2 == 0:
        raise ValueError("conservation law needs a polynomial pencil of odd degree")
    if not leading_is_invertible(pencil, tol):
        raise SingularLeadingCoefficientError("leading coefficient is singular")
    L0 = pencil.coefficients[0]
    Lp = pencil.coefficients[-1]
    n_minus_L0 = inertia(L0, tol=tol).n_minus
    lp = inertia(Lp, tol=tol)
    z = z_counts(pencil, tol)
    summary = real_crossings(pencil, steps, tol)
    kpos = summary.kappa_sum(True)
    kneg = summary.kappa_sum(False)
    N = pencil.dimension
    residual = N - 2 * n_minus_L0 - z.down_plus - z.down_minus + kpos - kneg
    return ConservationReport(
        N, n_minus_L0, lp.n_plus, lp.n_minus, z, kpos, kneg, summary.count(True), summary.count(False), residual
    )


def gker_dimension(sys: HamiltonianSystem, tol: Tolerances | None = None) -> tuple[int, int]:
    """(dim gKer(JL), dim Ker(L))."""
    tol = resolve(tol)
    JL = sys.JL
    scale = max(1.0, float(np.max(np.abs(JL))))
    gker = 0
    for value, mult in general_eigenvalues(JL, tol=tol):
        if abs(value) <= tol.cluster_rel * scale * 10:
            gker += mult
    return gker, inertia(sys.L, tol=tol).n_zero


@dataclass(frozen=True)
class IndexReport:
    N: int
    n_minus_L: int
    z: ZCounts
    kappa_plus_positive: int
    kappa_minus_negative: int
    kappa_positive: int
    kappa_negative: int
    n_u: int
    n_u_direct: int
    n_s: int
    zeta: int
    gker: int
    ker_L: int
    residual: int
    two_ns_from_indices: int
    details: dict = field(default_factory=dict, repr=False)

    @property
    def consistent(self) -> bool:
        return self.n_u == self.n_u_direct


def _direct_unstable(sys: HamiltonianSystem, tol: Tolerances) -> int:
    ev = general_eigenvalues(sys.JL, tol=tol)
    radius = max((abs(v) for v, _ in ev), default=0.0)
    re_tol = tol.re_tol_rel * (1.0 + radius)
    total = 0
    for v, mult in ev:
        r = abs(v.real)
        if re_tol / 10 < r <= re_tol * 10 and r != 0.0:
            raise InconsistentError(f"eigenvalue {v} has real part {r:.3g} near re_tol {re_tol:.3g}")
        if r > re_tol:
            total += mult
    if total % 2:
        raise InconsistentError("odd unstable multiplicity violates the Hamiltonian symmetry")
    return total // 2


def unstable_count(sys: HamiltonianSystem, tol: Tolerances | None = None, steps: int = 400) -> IndexReport:
    """n_u from the index formula, cross-checked against a direct count on σ(JL)."""
    tol = resolve(tol)
    pencil = pencil_from_hamiltonian(sys)
    N = sys.dimension
    n_minus_L = inertia(sys.L, tol=tol).n_minus
    z = z_counts(pencil, tol)
    summary = real_crossings(pencil, steps, tol)
    gker, ker_L = gker_dimension(sys, tol)
    twice_zeta = gker - (z.down_plus + z.down_minus)
    if twice_zeta % 2:
        raise InconsistentError(f"2*zeta = {twice_zeta} is odd")
    zeta = twice_zeta // 2
    kp_pos = summary.kappa_plus_sum(True)
    km_neg = summary.kappa_minus_sum(False)
    n_u = n_minus_L - zeta - kp_pos - km_neg
    direct = _direct_unstable(sys, tol)
    kpos = summary.kappa_sum(True)
    kneg = summary.kappa_sum(False)
    residual = N - 2 * n_minus_L - z.down_plus - z.down_minus + kpos - kneg
    two_ns = sum(summary.kappa_plus) + sum(summary.kappa_minus)
    report = IndexReport(
        N, n_minus_L, z, kp_pos, km_neg, kpos, kneg, n_u, direct, N // 2 - n_u, zeta, gker, ker_L, residual, two_ns,
        {"crossings": summary},
    )
    if not report.consistent:
        raise InconsistentError(f"index formula gives n_u={n_u}, direct count gives {direct}", report=report)
    return report


@dataclass(frozen=True)
class SymmetricCount:
    n_u: int
    n_u_negative_side: int
    zeta: int
    n_minus_L: int
    kappa_plus_positive: int
    parity_ok: bool


def full_symmetry_count(
    sys: HamiltonianSystem, U=None, tol: Tolerances | None = None, steps: int = 400
) -> SymmetricCount:
    """n_u = N₋(L) − ζ − 2Σ_{λ>0}κ⁺(λ) with ζ = ½dim gKer(JL) − Z⁻, for real J and L.

    ``U`` optionally realizes the conjugation I(u) = U·conj(u).
    """
    tol = resolve(tol)
    require_real(sys, U)
    pencil = pencil_from_hamiltonian(sys)
    n_minus_L = inertia(sys.L, tol=tol).n_minus
    z = z_counts(pencil, tol)
    summary = real_crossings(pencil, steps, tol)
    gker, _ = gker_dimension(sys, tol)
    if gker % 2:
        raise InconsistentError(f"dim gKer(JL) = {gker} is odd")
    zeta = gker // 2 - z.minus
    kp_pos = summary.kappa_plus_sum(True)
    km_neg = summary.kappa_minus_sum(False)
    n_u = n_minus_L - zeta - 2 * kp_pos
    other = n_minus_L - zeta - 2 * km_neg
    parity = (n_u - (n_minus_L - zeta)) % 2 == 0
    return SymmetricCount(n_u, other, zeta, n_minus_L, kp_pos, parity)


@dataclass(frozen=True)
class LowerBound:
    bound: int
    n_real: int
    satisfied: bool
    n_minus_M_plus: int
    n_minus_M_minus: int


def _kernel_basis(A: np.ndarray, tol: Tolerances) -> np.ndarray:
    w, V = np.linalg.eigh(A)
    cut = tol.inertia_rel * max(float(np.max(np.abs(w))), 1e-300) if w.size else 0.0
    return V[:, np.abs(w) <= cut]


def canonical_lower_bound(can: CanonicalHamiltonian, tol: Tolerances | None = None) -> LowerBound:
    """|N₋(PL₊P) − N₋(PL₋P)| against half the number of nonzero real points of σ(JL)."""
    tol = resolve(tol)
    Lp, Lm = np.asarray(can.L_plus, dtype=complex), np.asarray(can.L_minus, dtype=complex)
    n = Lp.shape[0]
    Kp, Km = _kernel_basis(Lp, tol), _kernel_basis(Lm, tol)
    if Kp.shape[1] and Km.shape[1]:
        overlap = spectral_norm(Kp.conj().T @ Km)
        if overlap > tol.kernel_angle_tol:
            raise KernelsNotOrthogonalError(f"kernels of L+ and L- overlap by {overlap:.3g}")
    K = np.hstack([Kp, Km])
    if K.shape[1]:
        P = np.eye(n) - K @ K.conj().T
        w, V = np.linalg.eigh(0.5 * (P + P.conj().T))
        basis = V[:, w > 0.5]
    else:
        basis = np.eye(n, dtype=complex)
    Mp = basis.conj().T @ Lp @ basis
    Mm = basis.conj().T @ Lm @ basis
    nmp = inertia(0.5 * (Mp + Mp.conj().T), tol=tol).n_minus
    nmm = inertia(0.5 * (Mm + Mm.conj().T), tol=tol).n_minus
    bound = abs(nmp - nmm)
    n_real = _nonzero_real_points(can.system().JL, tol)
    return LowerBound(bound, n_real, n_real // 2 >= bound, nmp, nmm)


def _nonzero_real_points(JL: np.ndarray, tol: Tolerances) -> int:
    """Nonzero real eigenvalues of JL counted with geometric multiplicity."""
    ev = general_eigenvalues(JL, tol=tol)
    radius = max((abs(v) for v, _ in ev), default=0.0)
    re_tol = tol.re_tol_rel * (1.0 + radius)
    total = 0
    n = JL.shape[0]
    for v, _ in ev:
        if abs(v.imag) <= re_tol and abs(v) > re_tol:
            s = np.linalg.svd(JL - v.real * np.eye(n), compute_uv=False)
            total += int(np.sum(s <= tol.kernel_rel * max(s[0], 1.0)))
    return total
