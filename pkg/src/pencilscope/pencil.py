"""Matrix pencils, Hamiltonian constructions, companion and Hankel forms."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb, factorial

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvariantViolationError,
    NotRealError,
    SingularJError,
    SingularLeadingCoefficientError,
)
from .linalg import as_matrix, general_eigenvalues, is_hermitian, spectral_norm
from .tolerances import Tolerances, resolve

# Deterministic probe points for the transcendental selfadjointness check.
_PROBES = np.array([0.3 + 0.7j, -1.1 + 0.2j, 0.9 - 1.3j, -0.4 - 0.6j, 2.0 + 0.5j, 0.1j, -2.5 + 1.5j])


class MatrixPencil:
    """Common interface: a matrix function of a complex parameter."""

    kind = "abstract"

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    def evaluate(self, lam: complex) -> np.ndarray:
        return self.evaluate_many(np.array([lam]))[0]

    def evaluate_many(self, lams) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, order: int = 1) -> "MatrixPencil":
        raise NotImplementedError

    def taylor(self, lam0: complex, count: int) -> list[np.ndarray]:
        """Taylor coefficients 𝓛^{(l)}(lam0)/l! for l = 0..count-1."""
        raise NotImplementedError

    def scale(self, lam: complex) -> float:
        """Size of the pencil near ``lam``, used to make tolerances relative."""
        raise NotImplementedError

    def is_selfadjoint(self, tol: Tolerances | None = None) -> bool:
        raise NotImplementedError

    def __call__(self, lam: complex) -> np.ndarray:
        return self.evaluate(lam)


def _poly_taylor(coeffs, lam0: complex, count: int) -> list[np.ndarray]:
    out = []
    n = coeffs[0].shape[0]
    for ell in range(count):
        acc = np.zeros((n, n), dtype=complex)
        for k in range(ell, len(coeffs)):
            acc = acc + comb(k, ell) * lam0 ** (k - ell) * coeffs[k]
        out.append(acc)
    return out


def _poly_eval_many(coeffs, lams: np.ndarray) -> np.ndarray:
    lams = np.asarray(lams, dtype=complex).ravel()
    n = coeffs[0].shape[0]
    out = np.broadcast_to(coeffs[-1], (lams.size, n, n)).astype(complex)
    for C in coeffs[-2::-1]:
        out = out * lams[:, None, None] + C
    return out


def _poly_derivative(coeffs, n: int) -> tuple[np.ndarray, ...]:
    if len(coeffs) <= 1:
        return (np.zeros((n, n), dtype=complex),)
    return tuple(k * coeffs[k] for k in range(1, len(coeffs)))


@dataclass(frozen=True, eq=False)
class PolynomialPencil(MatrixPencil):
    """𝓛(λ) = Σ_k λ^k L_k with square coefficients of a common size."""

    coefficients: tuple

    kind = "polynomial"

    def __post_init__(self):
        if len(self.coefficients) == 0:
            raise DimensionMismatchError("a polynomial pencil needs at least one coefficient")
        mats = tuple(as_matrix(C, f"L{k}") for k, C in enumerate(self.coefficients))
        n = mats[0].shape[0]
        for k, C in enumerate(mats):
            if C.shape != (n, n):
                raise DimensionMismatchError(f"coefficient L{k} has shape {C.shape}, expected {(n, n)}")
        object.__setattr__(self, "coefficients", mats)

    @property
    def dimension(self) -> int:
        return self.coefficients[0].shape[0]

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def evaluate_many(self, lams) -> np.ndarray:
        return _poly_eval_many(self.coefficients, lams)

    def derivative(self, order: int = 1) -> "PolynomialPencil":
        coeffs = self.coefficients
        for _ in range(order):
            coeffs = _poly_derivative(coeffs, self.dimension)
        return PolynomialPencil(coeffs)

    def taylor(self, lam0: complex, count: int) -> list[np.ndarray]:
        return _poly_taylor(self.coefficients, lam0, count)

    @cached_property
    def _norms(self) -> np.ndarray:
        return np.array([spectral_norm(C) for C in self.coefficients])

    def scale(self, lam: complex) -> float:
        return float(np.sum(self._norms * np.abs(lam) ** np.arange(len(self._norms))))

    def is_selfadjoint(self, tol: Tolerances | None = None) -> bool:
        tol = resolve(tol)
        return all(is_hermitian(C, tol.hermitian_rel) for C in self.coefficients)

    def equals(self, other, rtol: float = 0.0) -> bool:
        if not isinstance(other, PolynomialPencil) or other.degree != self.degree:
            return False
        return all(np.allclose(a, b, rtol=rtol, atol=0) for a, b in zip(self.coefficients, other.coefficients))


@dataclass(frozen=True, eq=False)
class DelayPencil(MatrixPencil):
    """𝓛(λ) = P(λ) + exp(-τλ) Q(λ) with matrix polynomials P and Q.

    The DDE pencil λI - A - exp(-τλ)B is the case P = [-A, I], Q = [-B];
    the general form is closed under differentiation.
    """

    poly: tuple
    delayed: tuple
    tau: float

    kind = "dde"

    def __post_init__(self):
        poly = tuple(as_matrix(C) for C in self.poly)
        delayed = tuple(as_matrix(C) for C in self.delayed)
        shapes = {C.shape for C in poly + delayed}
        if len(shapes) != 1:
            raise DimensionMismatchError(f"delay pencil blocks have shapes {sorted(shapes)}")
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise InvariantViolationError("tau must be finite and positive", field="tau")
        object.__setattr__(self, "poly", poly)
        object.__setattr__(self, "delayed", delayed)
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def dimension(self) -> int:
        return self.poly[0].shape[0]

    def evaluate_many(self, lams) -> np.ndarray:
        lams = np.asarray(lams, dtype=complex).ravel()
        damp = np.exp(-self.tau * lams)[:, None, None]
        return _poly_eval_many(self.poly, lams) + damp * _poly_eval_many(self.delayed, lams)

    def derivative(self, order: int = 1) -> "DelayPencil":
        n = self.dimension
        zero = np.zeros((n, n), dtype=complex)
        poly, delayed = self.poly, self.delayed
        for _ in range(order):
            # (exp(-τλ) Q)' = exp(-τλ) (Q' - τQ)
            dq = _poly_derivative(delayed, n)
            width = max(len(dq), len(delayed))
            delayed = tuple(
                (dq[k] if k < len(dq) else zero) - self.tau * (delayed[k] if k < len(delayed) else zero)
                for k in range(width)
            )
            poly = _poly_derivative(poly, n)
        return DelayPencil(poly, delayed, self.tau)

    def taylor(self, lam0: complex, count: int) -> list[np.ndarray]:
        p = _poly_taylor(self.poly, lam0, count)
        q = _poly_taylor(self.delayed, lam0, count)
        damp = np.exp(-self.tau * lam0)
        out = []
        for ell in range(count):
            acc = p[ell].copy()
            for i in range(ell + 1):
                j = ell - i
                acc = acc + damp * q[i] * (-self.tau) ** j / factorial(j)
            out.append(acc)
        return out

    def scale(self, lam: complex) -> float:
        lam = complex(lam)
        powers = lambda m: np.abs(lam) ** np.arange(m)  # noqa: E731
        a = sum(spectral_norm(C) * w for C, w in zip(self.poly, powers(len(self.poly))))
        b = sum(spectral_norm(C) * w for C, w in zip(self.delayed, powers(len(self.delayed))))
        return float(a + np.exp(-self.tau * lam.real) * b)

    def is_selfadjoint(self, tol: Tolerances | None = None, seed: int | None = None) -> bool:
        """Heuristic check of 𝓛(conj λ)* = 𝓛(λ) on a probe set of complex λ."""
        probes = _PROBES
        if seed is not None:
            rng = np.random.default_rng(seed)
            probes = rng.uniform(-2, 2, 7) + 1j * rng.uniform(-2, 2, 7)
        lhs = np.conj(np.swapaxes(self.evaluate_many(np.conj(probes)), -1, -2))
        rhs = self.evaluate_many(probes)
        for k, lam in enumerate(probes):
            if np.linalg.norm(lhs[k] - rhs[k]) > 1e-10 * max(self.scale(lam), 1.0):
                return False
        return True


@dataclass(frozen=True, eq=False)
class ResolventShiftPencil(MatrixPencil):
    """𝓜(λ) = I - δ(𝓛(λ) + δI)^{-1} built from a base pencil.

    Root chains of 𝓜 coincide with those of 𝓛 wherever 𝓛 + δI is invertible.
    Taylor coefficients come from the resolvent recursion, not from sampling.
    """

    base: MatrixPencil
    delta: float

    kind = "resolvent_shift"

    @property
    def dimension(self) -> int:
        return self.base.dimension

    def evaluate_many(self, lams) -> np.ndarray:
        n = self.dimension
        eye = np.eye(n)
        shifted = self.base.evaluate_many(lams) + self.delta * eye
        return eye - self.delta * np.linalg.inv(shifted)

    def taylor(self, lam0: complex, count: int) -> list[np.ndarray]:
        n = self.dimension
        T = self.base.taylor(lam0, count)
        R0 = np.linalg.inv(T[0] + self.delta * np.eye(n))
        R = [R0]
        # (𝓛 + δI) R = I order by order: R_j = -R_0 Σ_{i=1..j} T_i R_{j-i}.
        for j in range(1, count):
            acc = sum(T[i] @ R[j - i] for i in range(1, j + 1))
            R.append(-R0 @ acc)
        out = [np.eye(n) - self.delta * R[0]]
        out.extend(-self.delta * Rj for Rj in R[1:])
        return out

    def scale(self, lam: complex) -> float:
        return float(spectral_norm(self.evaluate(lam))) + 1.0

    def is_selfadjoint(self, tol: Tolerances | None = None) -> bool:
        return self.base.is_selfadjoint(tol)


@dataclass(frozen=True, eq=False)
class HamiltonianSystem:
    """Linearized Hamiltonian data: J skew-Hermitian invertible, L Hermitian."""

    J: np.ndarray
    L: np.ndarray
    tol: Tolerances = field(default_factory=Tolerances, repr=False)

    def __post_init__(self):
        J = as_matrix(self.J, "J")
        L = as_matrix(self.L, "L")
        if J.shape != L.shape:
            raise DimensionMismatchError(f"J has shape {J.shape} but L has shape {L.shape}")
        if J.shape[0] % 2:
            raise InvariantViolationError("dimension must be even", field="J")
        if np.linalg.norm(J + J.conj().T) > self.tol.hermitian_rel * np.linalg.norm(J):
            raise InvariantViolationError("J is not skew-Hermitian", field="J")
        if not is_hermitian(L, self.tol.hermitian_rel):
            raise InvariantViolationError("L is not Hermitian", field="L")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "L", L)

    @property
    def dimension(self) -> int:
        return self.J.shape[0]

    @cached_property
    def K(self) -> np.ndarray:
        iJ = 1j * self.J
        n = iJ.shape[0]
        if abs(np.linalg.det(iJ)) <= self.tol.leading_det_rel * spectral_norm(iJ) ** n:
            raise SingularJError("J is not invertible")
        K = np.linalg.inv(iJ)
        return 0.5 * (K + K.conj().T)

    @property
    def JL(self) -> np.ndarray:
        return self.J @ self.L

    def is_real(self, U=None, atol: float = 1e-12) -> bool:
        """Reality under the involution u -> U conj(u) (entrywise conjugation by default)."""
        mats = (self.J, self.L)
        if U is None:
            return all(np.max(np.abs(M.imag), initial=0.0) <= atol * max(1.0, np.max(np.abs(M))) for M in mats)
        U = as_matrix(U, "U")
        return all(np.allclose(M @ U, U @ M.conj(), atol=atol) for M in mats)


@dataclass(frozen=True, eq=False)
class CanonicalHamiltonian:
    """J = [[0, I], [-I, 0]] with L = diag(L_plus, L_minus)."""

    L_plus: np.ndarray
    L_minus: np.ndarray

    def __post_init__(self):
        Lp = as_matrix(self.L_plus, "L_plus")
        Lm = as_matrix(self.L_minus, "L_minus")
        if Lp.shape != Lm.shape:
            raise DimensionMismatchError("L_plus and L_minus must have equal size")
        for name, M in (("L_plus", Lp), ("L_minus", Lm)):
            if not is_hermitian(M):
                raise InvariantViolationError(f"{name} is not Hermitian", field=name)
        object.__setattr__(self, "L_plus", Lp)
        object.__setattr__(self, "L_minus", Lm)

    def system(self) -> HamiltonianSystem:
        n = self.L_plus.shape[0]
        Z = np.zeros((n, n))
        I = np.eye(n)
        J = np.block([[Z, I], [-I, Z]])
        L = np.block([[self.L_plus, Z], [Z, self.L_minus]])
        return HamiltonianSystem(J, L)


def pencil_from_hamiltonian(sys: HamiltonianSystem) -> PolynomialPencil:
    """The linear pencil L - λK with K = (iJ)^{-1}."""
    return PolynomialPencil((sys.L, -sys.K))


def dde_pencil(A, B, tau: float) -> DelayPencil:
    """λI - A - exp(-τλ)B."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.ndim != 2 or A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"A {A.shape} and B {B.shape} must be square of equal size")
    return DelayPencil((-A, np.eye(A.shape[0])), (-B,), tau)


def evaluate(pencil: MatrixPencil, lam: complex) -> np.ndarray:
    return pencil.evaluate(lam)


def pencil_derivative(pencil: MatrixPencil, order: int) -> MatrixPencil:
    if order < 1:
        raise ValueError("order must be positive")
    return pencil.derivative(order)


def is_selfadjoint(pencil: MatrixPencil, tol: Tolerances | None = None) -> bool:
    return pencil.is_selfadjoint(tol)


def _require_polynomial(pencil) -> PolynomialPencil:
    if not isinstance(pencil, PolynomialPencil):
        raise TypeError("this operation is defined for polynomial pencils only")
    return pencil


def leading_is_invertible(pencil: PolynomialPencil, tol: Tolerances | None = None) -> bool:
    tol = resolve(tol)
    Lp = pencil.coefficients[-1]
    n = pencil.dimension
    return bool(abs(np.linalg.det(Lp)) > tol.leading_det_rel * spectral_norm(Lp) ** n)


def companion_matrix(pencil: PolynomialPencil, tol: Tolerances | None = None) -> np.ndarray:
    """Block companion: identity superdiagonal, last block row -L_p^{-1} L_k."""
    pencil = _require_polynomial(pencil)
    p, n = pencil.degree, pencil.dimension
    if p < 1:
        raise SingularLeadingCoefficientError("degree must be at least 1")
    if not leading_is_invertible(pencil, tol):
        raise SingularLeadingCoefficientError("leading coefficient is singular")
    Lp_inv = np.linalg.inv(pencil.coefficients[-1])
    C = np.zeros((p * n, p * n), dtype=complex)
    for i in range(p - 1):
        C[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = np.eye(n)
    for k in range(p):
        C[(p - 1) * n:, k * n:(k + 1) * n] = -Lp_inv @ pencil.coefficients[k]
    return C


def hankel_form(pencil: PolynomialPencil) -> np.ndarray:
    """Block-Hankel B with block (i, j) = L_{i+j+1} (zero past the degree)."""
    pencil = _require_polynomial(pencil)
    p, n = pencil.degree, pencil.dimension
    if p < 1:
        raise ValueError("degree must be at least 1")
    B = np.zeros((p * n, p * n), dtype=complex)
    for i in range(p):
        for j in range(p):
            k = i + j + 1
            if k <= p:
                B[i * n:(i + 1) * n, j * n:(j + 1) * n] = pencil.coefficients[k]
    return B


def characteristic_values(pencil: PolynomialPencil, tol: Tolerances | None = None) -> list[tuple[complex, int]]:
    """Characteristic values with algebraic multiplicities, via the companion matrix."""
    return general_eigenvalues(companion_matrix(pencil, tol), tol=tol)


def real_characteristic_values(
    pencil: PolynomialPencil, imag_tol: float = 1e-6, tol: Tolerances | None = None
) -> list[tuple[float, int]]:
    """Characteristic values whose imaginary part is below ``imag_tol (1 + |λ|)``."""
    out = []
    for lam, mult in characteristic_values(pencil, tol):
        if abs(lam.imag) <= imag_tol * (1.0 + abs(lam)):
            out.append((float(lam.real), mult))
    return out


def cauchy_radius(pencil: PolynomialPencil) -> float:
    """Every characteristic value satisfies |λ| <= max(1, Σ_k ||L_p^{-1} L_k||)."""
    pencil = _require_polynomial(pencil)
    Lp_inv = np.linalg.inv(pencil.coefficients[-1])
    total = sum(spectral_norm(Lp_inv @ C) for C in pencil.coefficients[:-1])
    return max(1.0, float(total))


def require_real(sys: HamiltonianSystem, U=None) -> None:
    if not sys.is_real(U):
        raise NotRealError("J and L must be real under the chosen involution")
