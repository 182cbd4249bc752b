"""Evans and Evans-Krein functions: signatures and branch slopes from partial
derivatives of E(λ; μ) = det(𝓛(λ) − μW), and root counts by winding number.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from . import _numdiff
from .branches import geometric_multiplicity
from .errors import (
    ComplexRootsDetectedError,
    DerivativeBelowNoiseError,
    NotGeometricMultOneError,
    NotPositiveDefiniteError,
    NotSemisimpleError,
    NotSimpleError,
    PhaseStepTooLargeError,
    RootOnContourError,
)
from .linalg import EPS, check_hermitian, complex_det, durand_kerner, inertia
from .pencil import MatrixPencil, PolynomialPencil
from .tolerances import Tolerances, resolve


def evans_krein(pencil: MatrixPencil, lam: complex, mu: float) -> complex:
    """E(λ; μ) = det(𝓛(λ) − μI)."""
    A = pencil.evaluate(lam)
    return complex_det(A - mu * np.eye(A.shape[0]))


def _check_weight(S, n: int) -> np.ndarray:
    S = check_hermitian(S, "S")
    if S.shape != (n, n):
        raise ValueError(f"S must be {n}x{n}")
    if inertia(S).n_plus != n:
        raise NotPositiveDefiniteError("S is not positive definite")
    return S


def evans_krein_generalized(pencil: MatrixPencil, S, lam: complex, mu: float) -> complex:
    """det(𝓛(λ) − μS) for a Hermitian positive definite weight S."""
    S = _check_weight(S, pencil.dimension)
    return complex_det(pencil.evaluate(lam) - mu * S)


# ---------------------------------------------------------------------------
# partial derivatives


def _det_noise(mats: np.ndarray) -> float:
    """Rounding scale of det over a stack: ε‖A‖ times the sum of products of all but one singular value."""
    s = np.linalg.svd(mats, compute_uv=False)
    n = s.shape[-1]
    if n == 1:
        return float(4 * EPS * np.max(s))
    partial = np.stack([np.prod(np.delete(s, j, axis=-1), axis=-1) for j in range(n)], axis=-1)
    return float(4 * n * EPS * np.max(s[..., 0] * partial.sum(axis=-1)))


def _local_evaluator(pencil: MatrixPencil, lam0: float):
    """t -> 𝓛(λ₀ + t); polynomial pencils are re-expanded at λ₀ so offsets stay exact."""
    if isinstance(pencil, PolynomialPencil):
        shifted = PolynomialPencil(tuple(pencil.taylor(lam0, pencil.degree + 1)))
        return shifted.evaluate_many
    return lambda t: pencil.evaluate_many(lam0 + np.asarray(t))


def _dyadic(h: float) -> float:
    return float(2.0 ** np.round(np.log2(h)))


def evans_partial(
    pencil: MatrixPencil,
    lam0: float,
    a: int,
    b: int,
    S=None,
    tol: Tolerances | None = None,
) -> _numdiff.Derivative:
    """∂^{a+b}E/∂λ^a∂μ^b at (λ₀, 0) by Richardson-extrapolated central differences.

    Steps grow by sqrt(10) per derivative order to keep rounding under control.
    """
    tol = resolve(tol)
    n = pencil.dimension
    W = np.eye(n) if S is None else _check_weight(S, n)
    A0 = pencil.evaluate(lam0)
    grow = 10.0 ** ((max(a + b, 1) - 1) / 2)
    h_lam = _dyadic(tol.evans_step_rel * (1.0 + abs(lam0)) * grow)
    h_mu = _dyadic(tol.evans_step_rel * (1.0 + float(np.linalg.norm(A0, 2))) * grow)
    offsets = _numdiff.mixed_offsets(a, b, h_lam, h_mu)
    mats = _local_evaluator(pencil, lam0)(offsets[:, 0]) - offsets[:, 1, None, None] * W
    values = np.linalg.det(mats)
    return _numdiff.mixed_richardson(values, a, b, h_lam, h_mu, _det_noise(mats))


def _significant(d: _numdiff.Derivative, tol: Tolerances) -> bool:
    return abs(d.value) > tol.noise_factor * d.noise


def signature_from_evans(
    pencil: MatrixPencil, lam0: float, S=None, tol: Tolerances | None = None
) -> int:
    """κ(λ₀) = −sign(D′(λ₀) / E_μ(λ₀; 0)) at a simple real characteristic value."""
    tol = resolve(tol)
    if geometric_multiplicity(pencil, lam0, tol) != 1:
        raise NotSimpleError(f"lambda={lam0:.12g} is not geometrically simple")
    d_lam = evans_partial(pencil, lam0, 1, 0, S, tol)
    d_mu = evans_partial(pencil, lam0, 0, 1, S, tol)
    # With a one-dimensional kernel E_mu != 0, so a vanishing D' means alpha > 1.
    if _significant(d_mu, tol) and not _significant(d_lam, tol):
        raise NotSimpleError(f"D' vanishes at lambda={lam0:.12g}: algebraic multiplicity exceeds 1")
    for name, d in (("D'", d_lam), ("E_mu", d_mu)):
        if not _significant(d, tol):
            raise DerivativeBelowNoiseError(
                f"{name} = {abs(d.value):.3g} is below {tol.noise_factor:g}x noise {d.noise:.3g}"
            )
    return -int(np.sign(d_lam.value.real / d_mu.value.real))


def evans_slope_sign(pencil: MatrixPencil, lam0: float, tol: Tolerances | None = None) -> int:
    """sign(D′(λ₀)) alone, without the E_μ correction."""
    tol = resolve(tol)
    d = evans_partial(pencil, lam0, 1, 0, None, tol)
    if not _significant(d, tol):
        raise DerivativeBelowNoiseError(f"D' below noise at lambda={lam0:.12g}")
    return int(np.sign(d.value.real))


def high_order_derivative_gm1(
    pencil: MatrixPencil, lam0: float, m: int, tol: Tolerances | None = None
) -> float:
    """μ₁^{(m)}(λ₀) = −∂^m_λ E(λ₀; 0) / E_μ(λ₀; 0) when Ker 𝓛(λ₀) is one-dimensional."""
    tol = resolve(tol)
    if geometric_multiplicity(pencil, lam0, tol) != 1:
        raise NotGeometricMultOneError(f"kernel at lambda={lam0:.12g} is not one-dimensional")
    d_m = evans_partial(pencil, lam0, m, 0, None, tol)
    d_mu = evans_partial(pencil, lam0, 0, 1, None, tol)
    for name, d in ((f"d^{m}E/dlambda^{m}", d_m), ("E_mu", d_mu)):
        if not _significant(d, tol):
            raise DerivativeBelowNoiseError(f"{name} below noise at lambda={lam0:.12g}")
    return float(-(d_m.value / d_mu.value).real)


@dataclass(frozen=True)
class MixedPartialCheck:
    n: int
    j: int
    value: float
    noise: float

    @property
    def vanishes(self) -> bool:
        return abs(self.value) <= 10.0 * self.noise


def vanishing_partials(
    pencil: MatrixPencil, lam0: float, k: int, tol: Tolerances | None = None
) -> list[MixedPartialCheck]:
    """∂^{n+j}E/∂μ^n∂λ^j at (λ₀, 0) for n + j < k; all vanish at a semisimple value of multiplicity k."""
    tol = resolve(tol)
    out = []
    for total in range(k):
        for n in range(total + 1):
            d = evans_partial(pencil, lam0, total - n, n, None, tol)
            out.append(MixedPartialCheck(n, total - n, float(abs(d.value)), d.noise))
    return out


def semisimple_slopes(pencil: MatrixPencil, lam0: float, tol: Tolerances | None = None) -> np.ndarray:
    """Slopes μ_j′(λ₀) of the k branches through a semisimple characteristic value.

    Along μ = z(λ − λ₀) the k-th derivative of E is Σ_n C(k,n) ∂^kE/∂μ^n∂λ^{k−n} zⁿ,
    which is proportional to ∏(z − μ_j′(λ₀)).
    """
    tol = resolve(tol)
    k = geometric_multiplicity(pencil, lam0, tol)
    if k == 0:
        raise NotSemisimpleError(f"lambda={lam0:.12g} is not a characteristic value")
    parts = [evans_partial(pencil, lam0, k - n, n, None, tol) for n in range(k + 1)]
    coeffs = np.array([comb(k, n) * parts[n].value for n in range(k + 1)], dtype=complex)
    if not _significant(parts[k], tol):
        raise DerivativeBelowNoiseError("leading mu-derivative below noise")
    roots = durand_kerner(coeffs)
    if np.any(np.abs(roots.imag) > tol.imag_discard * (1.0 + np.abs(roots))):
        raise ComplexRootsDetectedError(f"slope polynomial has complex roots {roots}")
    noise = max(p.noise for p in parts) / abs(parts[k].value)
    slopes = np.sort(roots.real)
    if np.any(np.abs(slopes) <= tol.noise_factor * noise):
        raise NotSemisimpleError(f"zero slope at lambda={lam0:.12g}: a branch vanishes to higher order")
    return slopes


# ---------------------------------------------------------------------------
# winding numbers


@dataclass(frozen=True)
class Contour:
    """Closed polygon in the complex plane; the last vertex repeats the first."""

    vertices: tuple
    samples_per_edge: int = 64

    def __post_init__(self):
        v = tuple(complex(z) for z in self.vertices)
        if len(v) < 3:
            raise ValueError("contour needs at least three vertices")
        if v[0] != v[-1]:
            v = v + (v[0],)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def rectangle(cls, center: complex, half_width: float, half_height: float, samples_per_edge: int = 64):
        c = complex(center)
        w, h = half_width, half_height
        pts = (c + complex(-w, -h), c + complex(w, -h), c + complex(w, h), c + complex(-w, h))
        return cls(pts + (pts[0],), samples_per_edge)

    @classmethod
    def parse(cls, text: str, samples_per_edge: int = 64) -> "Contour":
        """Parse "x0,y0;x1,y1;..." into a closed polygon."""
        pts = []
        for item in text.split(";"):
            item = item.strip()
            if not item:
                continue
            x, y = item.split(",")
            pts.append(complex(float(x), float(y)))
        return cls(tuple(pts), samples_per_edge)


def winding_number(
    pencil: MatrixPencil,
    contour: Contour,
    mu: float = 0.0,
    S=None,
    tol: Tolerances | None = None,
) -> int:
    """Number of characteristic values of 𝓛 − μW inside ``contour`` (argument principle).

    Edges are sampled uniformly and any sub-interval whose phase increment
    reaches π/2 is bisected until the increment is smaller.
    """
    tol = resolve(tol)
    n = pencil.dimension
    W = np.eye(n) if S is None else _check_weight(S, n)

    def E(z: np.ndarray) -> np.ndarray:
        return np.linalg.det(pencil.evaluate_many(z) - mu * W)

    verts = np.array(contour.vertices)
    pieces = []
    for a, b in zip(verts[:-1], verts[1:]):
        t = np.linspace(0.0, 1.0, contour.samples_per_edge + 1)
        z = a + (b - a) * t
        pieces.append((a, b, t, E(z)))
    scale = max(float(np.max(np.abs(vals))) for *_, vals in pieces)
    floor = tol.winding_margin_rel * scale
    total = 0.0
    for a, b, t, vals in pieces:
        if np.min(np.abs(vals)) <= floor:
            raise RootOnContourError("|E| vanishes to margin on the contour")
        for i in range(len(t) - 1):
            total += _phase_change(E, a, b, t[i], t[i + 1], vals[i], vals[i + 1], floor, tol.winding_max_refine)
    turns = total / (2 * np.pi)
    count = int(round(turns))
    if abs(turns - count) > 1e-6:
        raise PhaseStepTooLargeError(f"phase change {turns:.6g} turns is not an integer")
    return count


def _phase_change(E, a, b, t0, t1, e0, e1, floor, depth) -> float:
    step = float(np.angle(e1 / e0))
    if abs(step) < np.pi / 2:
        return step
    if depth <= 0:
        raise PhaseStepTooLargeError("phase increment stays above pi/2 after maximal refinement")
    tm = 0.5 * (t0 + t1)
    em = E(np.array([a + (b - a) * tm]))[0]
    if abs(em) <= floor:
        raise RootOnContourError("|E| vanishes to margin on the contour")
    return _phase_change(E, a, b, t0, tm, e0, em, floor, depth - 1) + _phase_change(
        E, a, b, tm, t1, em, e1, floor, depth - 1
    )
