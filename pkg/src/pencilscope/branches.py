"""Eigenvalue branches μ_j(λ) of selfadjoint pencils along the real axis.

Branches are sampled on a grid and labelled by eigenvector overlap from one
point to the next, which follows the analytic labelling through exact
crossings. Zeros of the branches are the real characteristic values; their
local structure (order of vanishing, leading sign) is measured by
:func:`analyze_crossing`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.optimize import brentq, minimize_scalar

from . import _numdiff
from .errors import MatchingAmbiguousError, NotSelfadjointError, OrderUndeterminedError
from .linalg import EPS, hermitian_eigen_batch, spectral_norm
from .pencil import MatrixPencil
from .tolerances import Tolerances, resolve

# Relative eigenvalue gap below which eigenvectors at a point are treated as degenerate.
_DEGENERATE_REL = 1e-12
# Chebyshev sample count and fit degree for local root counting.
_FIT_POINTS = 40
_FIT_DEGREE = 14
# Fitted roots within this fraction of the local radius count toward the order.
_ROOT_DISC = 0.1


@dataclass(frozen=True, eq=False)
class BranchFamily:
    """Matched branches: ``values[i, j]`` is branch j at ``grid[i]``.

    ``vectors[i][:, j]`` is the matching unit eigenvector, ``permutations[i, j]``
    the position of branch j in the ascending eigenvalue order at ``grid[i]``,
    and ``overlaps[i, j]`` the overlap achieved between grid points i and i+1.
    """

    grid: np.ndarray
    values: np.ndarray
    vectors: np.ndarray
    permutations: np.ndarray
    overlaps: np.ndarray

    @property
    def n_branches(self) -> int:
        return self.values.shape[1]

    def branch(self, j: int) -> np.ndarray:
        return self.values[:, j]


@dataclass(frozen=True)
class LocalBranch:
    """One branch vanishing at a crossing, with its local Taylor data."""

    order: int
    sign: int
    derivatives: tuple
    noise: tuple
    vector: np.ndarray = field(repr=False)
    vector_derivatives: tuple = field(repr=False)
    fit_order: int = 0


@dataclass(frozen=True)
class LocalCrossing:
    lam0: float
    branches: tuple
    radius: float

    @property
    def geometric_multiplicity(self) -> int:
        return len(self.branches)

    @property
    def algebraic_multiplicity(self) -> int:
        return sum(b.order for b in self.branches)


@dataclass(frozen=True)
class CrossingEvent:
    """A real characteristic value seen as a common zero of some branches."""

    lam0: float
    branch_ids: tuple
    orders: tuple
    signs: tuple
    local: LocalCrossing = field(repr=False, compare=False)

    @property
    def k(self) -> int:
        return len(self.branch_ids)

    @property
    def alpha(self) -> int:
        return int(sum(self.orders))


# ---------------------------------------------------------------------------
# matching


def _eig(pencil: MatrixPencil, lams) -> tuple[np.ndarray, np.ndarray]:
    return hermitian_eigen_batch(pencil.evaluate_many(np.atleast_1d(lams)))


def _clusters(w: np.ndarray, gap: float) -> list[list[int]]:
    groups = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[i - 1] <= gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _scores(Va, wa, Vb, wb, gap_a: float, gap_b: float) -> np.ndarray:
    """Overlap scores; inside degenerate clusters use the block (subspace) overlap."""
    S = np.abs(Va.conj().T @ Vb)
    ca = _clusters(wa, gap_a)
    cb = _clusters(wb, gap_b)
    if len(ca) == len(wa) and len(cb) == len(wb):
        return S
    for ga in ca:
        for gb in cb:
            if len(ga) > 1 or len(gb) > 1:
                block = Va[:, ga].conj().T @ Vb[:, gb]
                S[np.ix_(ga, gb)] = np.linalg.norm(block, 2)
    return S


def _greedy(S: np.ndarray, wa: np.ndarray, wb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Greedy assignment on overlaps, ties broken by eigenvalue proximity."""
    n = S.shape[0]
    a_idx, b_idx = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    a_idx = a_idx.ravel()
    b_idx = b_idx.ravel()
    key = np.lexsort((b_idx, a_idx, np.abs(wa[a_idx] - wb[b_idx]), -np.round(S.ravel(), 9)))
    match = -np.ones(n, dtype=int)
    used = np.zeros(n, dtype=bool)
    for t in key:
        a, b = a_idx[t], b_idx[t]
        if match[a] < 0 and not used[b]:
            match[a] = b
            used[b] = True
    return match, S[np.arange(n), match]


def _degenerate(w: np.ndarray, gap: float) -> bool:
    return len(w) > 1 and float(np.min(np.diff(w))) <= gap


def sample_branches(
    pencil: MatrixPencil,
    lam_min: float,
    lam_max: float,
    steps: int = 400,
    tol: Tolerances | None = None,
) -> BranchFamily:
    """Sample and overlap-match all N branches on ``steps + 1`` grid points.

    Intervals whose worst achieved overlap falls below ``overlap_refine`` are
    bisected until the step drops below ``h_min``; grid points sitting on an
    exact eigenvalue collision are nudged by ``h_min / 7``.
    """
    tol = resolve(tol)
    if steps < 2 or not lam_min < lam_max:
        raise ValueError("need steps >= 2 and lam_min < lam_max")
    if not pencil.is_selfadjoint(tol):
        raise NotSelfadjointError("branches are defined for selfadjoint pencils only")
    grid = np.linspace(float(lam_min), float(lam_max), int(steps) + 1)
    h_min = tol.h_min_rel * (lam_max - lam_min)
    w_all, V_all = _eig(pencil, grid)

    def gap_at(lam):
        return _DEGENERATE_REL * max(pencil.scale(lam), 1e-300)

    def solve_point(lam):
        w, V = _eig(pencil, lam)
        w, V = w[0], V[0]
        if not _degenerate(w, gap_at(lam)):
            return lam, w, V
        for shift in (1, -1, 2, -2):
            trial = lam + shift * h_min / 7
            tw, tV = _eig(pencil, trial)
            if not _degenerate(tw[0], gap_at(trial)):
                return trial, tw[0], tV[0]
        return lam, w, V

    lams, ws, Vs = [], [], []
    for i, lam in enumerate(grid):
        if _degenerate(w_all[i], gap_at(lam)):
            lam, w, V = solve_point(lam)
        else:
            w, V = w_all[i], V_all[i]
        lams.append(float(lam))
        ws.append(w)
        Vs.append(V)

    n = pencil.dimension
    perms = [np.arange(n)]
    achieved = []
    i = 0
    while i < len(lams) - 1:
        S = _scores(Vs[i], ws[i], Vs[i + 1], ws[i + 1], gap_at(lams[i]), gap_at(lams[i + 1]))
        match, ach = _greedy(S, ws[i], ws[i + 1])
        worst = float(np.min(ach))
        if worst < tol.overlap_refine and lams[i + 1] - lams[i] > h_min:
            mid, w, V = solve_point(0.5 * (lams[i] + lams[i + 1]))
            lams.insert(i + 1, mid)
            ws.insert(i + 1, w)
            Vs.insert(i + 1, V)
            continue
        if worst < tol.overlap_floor:
            raise MatchingAmbiguousError(
                f"eigenvector overlap {worst:.3g} below floor near lambda={lams[i]:.6g}", lam=lams[i]
            )
        prev = perms[-1]
        perms.append(match[prev])
        achieved.append(ach[prev])
        i += 1

    P = np.array(perms)
    W = np.array(ws)
    V = np.array(Vs)
    values = np.take_along_axis(W, P, axis=1)
    vectors = np.take_along_axis(V, P[:, None, :], axis=2)
    return BranchFamily(np.array(lams), values, vectors, P, np.array(achieved).reshape(-1, n))


# ---------------------------------------------------------------------------
# local analysis


def kernel_tolerance(pencil: MatrixPencil, lam0: float, tol: Tolerances | None = None) -> float:
    tol = resolve(tol)
    M = pencil.evaluate(lam0)
    return tol.kernel_rel * max(spectral_norm(M), pencil.scale(lam0))


def geometric_multiplicity(pencil: MatrixPencil, lam0: float, tol: Tolerances | None = None) -> int:
    """Number of eigenvalues of 𝓛(λ₀) within the kernel tolerance of zero."""
    w, _ = _eig(pencil, float(lam0))
    return int(np.sum(np.abs(w[0]) <= kernel_tolerance(pencil, lam0, tol)))


def _center_out_labels(w: np.ndarray, V: np.ndarray, offsets: np.ndarray, tol: Tolerances, gap: float):
    """Label eigenpairs at offsets by matching outward from the innermost points."""
    n = w.shape[1]
    pos = [int(i) for i in np.argsort(offsets) if offsets[i] > 0]
    neg = [int(i) for i in np.argsort(-offsets) if offsets[i] < 0]
    perms = np.zeros((len(offsets), n), dtype=int)
    first = pos[0]
    perms[first] = np.arange(n)
    worst = 1.0
    for chain in (pos[1:], neg):
        prev = first
        for idx in chain:
            S = _scores(V[prev], w[prev], V[idx], w[idx], gap, gap)
            match, ach = _greedy(S, w[prev], w[idx])
            worst = min(worst, float(np.min(ach)))
            perms[idx] = match[perms[prev]]
            prev = idx
    if worst < tol.overlap_floor:
        raise MatchingAmbiguousError(f"local branch matching overlap {worst:.3g} below floor")
    values = np.take_along_axis(w, perms, axis=1)
    vectors = np.take_along_axis(V, perms[:, None, :], axis=2)
    return values, vectors


def _fd_step(n: int, h0: float, radius: float) -> float:
    pts, _ = _numdiff.stencil(n, centered=False)
    h = h0 * 10.0 ** (max(n - 1, 0) / 3.0)
    return min(h, radius / float(np.max(np.abs(pts))))


@dataclass
class _PassResult:
    lam0: float
    radius: float
    k: int
    shift: float
    branches: list


def _local_pass(pencil: MatrixPencil, lam0: float, tol: Tolerances) -> _PassResult | None:
    w0, V0 = _eig(pencil, lam0)
    w0, V0 = w0[0], V0[0]
    ktol = kernel_tolerance(pencil, lam0, tol)
    kernel = np.abs(w0) <= ktol
    k = int(np.sum(kernel))
    if k == 0:
        return None
    n = pencil.dimension
    scale = max(pencil.scale(lam0), 1e-300)
    others = np.abs(w0[~kernel])
    gap = float(np.min(others)) if others.size else np.inf
    slope = max(spectral_norm(pencil.derivative(1).evaluate(lam0)), 1e-300)
    radius = min(0.05 * (1.0 + abs(lam0)), 0.05 * gap / slope)
    radius = max(radius, 1e-6 * (1.0 + abs(lam0)))

    fit_x = radius * np.cos((2 * np.arange(_FIT_POINTS) + 1) * np.pi / (2 * _FIT_POINTS))
    h0 = tol.branch_step_rel * (1.0 + abs(lam0))
    fd_blocks = []
    for order in range(tol.max_order + 1):
        h = _fd_step(order, h0, radius)
        fd_blocks.append((order, h, _numdiff.stencil_offsets(order, h, centered=False)))
    offsets = np.concatenate([fit_x] + [b[2] for b in fd_blocks])
    w, V = _eig(pencil, lam0 + offsets)
    values, vectors = _center_out_labels(w, V, offsets, tol, _DEGENERATE_REL * scale)

    # Vanishing branches: largest projection onto Ker 𝓛(λ₀) at the innermost points.
    inner = np.argsort(np.abs(offsets))[:2]
    K = V0[:, kernel]
    proj = np.mean([np.linalg.norm(K.conj().T @ vectors[i], axis=0) for i in inner], axis=0)
    labels = sorted(np.argsort(-proj, kind="stable")[:k].tolist())

    value_noise = 8.0 * EPS * n * scale
    results = []
    for j in labels:
        ref = vectors[inner[np.argmax(offsets[inner])]][:, j]
        phase = np.einsum("i,ki->k", ref.conj(), vectors[:, :, j])
        aligned = vectors[:, :, j] * (np.conj(phase) / np.maximum(np.abs(phase), 1e-300))[:, None]

        fit = Chebyshev.fit(fit_x, values[:_FIT_POINTS, j], _FIT_DEGREE, domain=[-radius, radius])
        roots = fit.roots()
        near = roots[np.abs(roots) <= _ROOT_DISC * radius] if roots.size else roots
        if near.size == 0 and roots.size:
            nearest = roots[np.argmin(np.abs(roots))]
            if abs(nearest) <= 0.5 * radius:
                near = roots[np.abs(roots - nearest) <= _ROOT_DISC * radius]
        fit_order = int(near.size)
        centre = float(np.mean(near).real) if fit_order else 0.0
        fit_sign = 0
        if fit_order:
            fit_sign = int(np.sign(fit.deriv(fit_order)(centre).real))

        derivs, noises, vec_derivs = [], [], []
        start = _FIT_POINTS
        for order, h, offs in fd_blocks:
            block = slice(start, start + offs.size)
            start += offs.size
            d = _numdiff.richardson(values[block, j], order, h, centered=False, value_noise=value_noise)
            derivs.append(float(d.value))
            noises.append(d.noise)
            vd = _numdiff.richardson(aligned[block], order, h, centered=False)
            vec_derivs.append(np.asarray(vd.value))
        results.append(
            dict(
                fit_order=fit_order,
                fit_sign=fit_sign,
                centre=centre,
                derivatives=derivs,
                noise=noises,
                vector=vec_derivs[0] / np.linalg.norm(vec_derivs[0]),
                vector_derivatives=vec_derivs,
            )
        )

    usable = [r for r in results if r["fit_order"] > 0]
    shift = 0.0
    if usable:
        lowest = min(r["fit_order"] for r in usable)
        shift = float(np.mean([r["centre"] for r in usable if r["fit_order"] == lowest]))
    return _PassResult(lam0, radius, k, shift, results)


def _finalize(raw: dict, tol: Tolerances, lam0: float) -> LocalBranch:
    d = raw["derivatives"]
    e = raw["noise"]
    fd_order = 0
    for order in range(1, tol.max_order + 1):
        if abs(d[order]) > tol.noise_factor * e[order]:
            fd_order = order
            break
    fit_order = raw["fit_order"]
    if fd_order == 0:
        raise OrderUndeterminedError(
            f"no derivative up to order {tol.max_order} above noise at lambda={lam0:.12g}", lam=lam0
        )
    fd_sign = int(np.sign(d[fd_order]))
    if fit_order != fd_order or raw["fit_sign"] != fd_sign:
        raise OrderUndeterminedError(
            f"finite differences give order {fd_order}, local fit gives {fit_order} at lambda={lam0:.12g}",
            lam=lam0,
            fd_order=fd_order,
            fit_order=fit_order,
        )
    return LocalBranch(
        order=fd_order,
        sign=fd_sign,
        derivatives=tuple(d),
        noise=tuple(e),
        vector=raw["vector"],
        vector_derivatives=tuple(raw["vector_derivatives"]),
        fit_order=fit_order,
    )


def analyze_crossing(
    pencil: MatrixPencil, lam0: float, refine: bool = True, tol: Tolerances | None = None
) -> LocalCrossing | None:
    """Local structure of the branches vanishing at (or near) ``lam0``.

    With ``refine`` the location is re-centred on the root cluster of a local
    Chebyshev fit until it settles; pass ``refine=False`` when ``lam0`` is
    known exactly. Returns ``None`` when 𝓛(λ₀) has no kernel.
    """
    tol = resolve(tol)
    lam0 = float(lam0)
    result = _local_pass(pencil, lam0, tol)
    if result is None:
        return None
    if refine:
        for _ in range(4):
            if abs(result.shift) <= 1e-14 * (1.0 + abs(lam0)):
                break
            lam0 = lam0 + result.shift
            nxt = _local_pass(pencil, lam0, tol)
            if nxt is None:
                break
            result = nxt
    branches = [_finalize(raw, tol, result.lam0) for raw in result.branches]
    branches.sort(key=lambda b: (-b.order, -b.sign))
    return LocalCrossing(result.lam0, tuple(branches), result.radius)


def order_of_vanishing(pencil: MatrixPencil, lam0: float, branch=0, tol: Tolerances | None = None):
    """(m, η) for one branch vanishing at ``lam0``.

    ``branch`` is an index into the vanishing branches (sorted by decreasing
    order) or a vector matched by largest overlap.
    """
    local = analyze_crossing(pencil, lam0, tol=tol)
    if local is None:
        raise OrderUndeterminedError(f"no branch vanishes at lambda={lam0:.12g}")
    if isinstance(branch, (int, np.integer)):
        b = local.branches[int(branch)]
    else:
        v = np.asarray(branch, dtype=complex)
        b = max(local.branches, key=lambda lb: abs(np.vdot(lb.vector, v)))
    return b.order, b.sign


# ---------------------------------------------------------------------------
# crossings


def _branch_value(pencil: MatrixPencil, lam: float, ref: np.ndarray) -> float:
    w, V = _eig(pencil, lam)
    j = int(np.argmax(np.abs(V[0].conj().T @ ref)))
    return float(w[0][j])


def find_crossings(
    pencil: MatrixPencil, family: BranchFamily, tol: Tolerances | None = None
) -> list[CrossingEvent]:
    """Zeros of the sampled branches, polished and analysed.

    Sign changes are polished by Brent's bracketed method on the matched
    branch; interior minima of |μ| that touch zero within ``crossing_tol``
    are located by bounded minimisation.
    """
    tol = resolve(tol)
    grid, vals = family.grid, family.values
    crossing_tol = tol.crossing_rel * (1.0 + float(np.max(np.abs(vals))))
    xtol = 1e-14
    candidates: list[float] = []
    for j in range(family.n_branches):
        mu = vals[:, j]
        for i in range(len(grid)):
            if abs(mu[i]) <= crossing_tol:
                candidates.append(float(grid[i]))
        for i in range(len(grid) - 1):
            if mu[i] * mu[i + 1] < 0 and abs(mu[i]) > crossing_tol and abs(mu[i + 1]) > crossing_tol:
                ref = family.vectors[i][:, j]
                f = lambda x, ref=ref: _branch_value(pencil, x, ref)  # noqa: E731
                root = brentq(f, grid[i], grid[i + 1], xtol=xtol, rtol=4 * EPS, maxiter=200)
                candidates.append(float(root))
        for i in range(1, len(grid) - 1):
            a, b, c = abs(mu[i - 1]), abs(mu[i]), abs(mu[i + 1])
            if not (b <= a and b <= c) or b <= crossing_tol:
                continue
            if mu[i - 1] * mu[i] <= 0 or mu[i] * mu[i + 1] <= 0:
                continue
            if b > 1e-2 * (1.0 + float(np.max(np.abs(mu)))):
                continue
            s = float(np.sign(mu[i]))
            ref = family.vectors[i][:, j]
            res = minimize_scalar(
                lambda x, ref=ref, s=s: s * _branch_value(pencil, x, ref),
                bounds=(grid[i - 1], grid[i + 1]),
                method="bounded",
                options={"xatol": 1e-13},
            )
            if abs(res.fun) <= crossing_tol:
                candidates.append(float(res.x))

    events: list[CrossingEvent] = []
    for lam in sorted(candidates):
        if any(abs(lam - e.lam0) <= 1e-7 * (1.0 + abs(lam)) for e in events):
            continue
        local = analyze_crossing(pencil, lam, tol=tol)
        if local is None:
            continue
        if any(abs(local.lam0 - e.lam0) <= 1e-7 * (1.0 + abs(local.lam0)) for e in events):
            continue
        ids = _assign_ids(family, local)
        events.append(
            CrossingEvent(
                lam0=local.lam0,
                branch_ids=tuple(ids),
                orders=tuple(b.order for b in local.branches),
                signs=tuple(b.sign for b in local.branches),
                local=local,
            )
        )
    events.sort(key=lambda e: e.lam0)
    return events


def _assign_ids(family: BranchFamily, local: LocalCrossing) -> list[int]:
    """Map local vanishing branches to family labels by eigenvector overlap."""
    i = int(np.argmin(np.abs(family.grid - local.lam0)))
    V = family.vectors[i]
    S = np.abs(np.array([b.vector for b in local.branches]).conj() @ V)
    ids: list[int] = []
    for row in S:
        order = np.argsort(-row, kind="stable")
        ids.append(int(next(j for j in order if j not in ids)))
    return ids


def default_window(pencil: MatrixPencil) -> tuple[float, float]:
    """A real window containing every real characteristic value of a polynomial pencil."""
    from .pencil import PolynomialPencil, cauchy_radius

    if isinstance(pencil, PolynomialPencil) and pencil.degree >= 1:
        R = 1.1 * cauchy_radius(pencil) + 0.1
        return -R, R
    return -10.0, 10.0
