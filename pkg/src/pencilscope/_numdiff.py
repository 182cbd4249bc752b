"""Finite-difference stencils with Richardson extrapolation.

Symmetric stencils have error expansions in even powers of h, so three
levels (h, h/2, h/4) eliminate the h**2 and h**4 terms.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import ceil, factorial

import numpy as np

LEVELS = (1.0, 0.5, 0.25)


@lru_cache(maxsize=None)
def _weights(points: tuple, n: int) -> np.ndarray:
    s = np.array(points, dtype=float)
    V = np.vander(s, len(s), increasing=True).T
    rhs = np.zeros(len(s))
    rhs[n] = factorial(n)
    return np.linalg.solve(V, rhs)


def stencil(n: int, centered: bool) -> tuple[np.ndarray, np.ndarray]:
    """Points (in units of h) and weights for an O(h**2) n-th derivative.

    ``centered=False`` omits the centre point, for functions that are
    ill-defined exactly at the expansion point.
    """
    if centered:
        p = max(1, ceil(n / 2))
        pts = tuple(float(k) for k in range(-p, p + 1))
    else:
        p = max(1, ceil((n + 1) / 2))
        pts = tuple(float(k) for k in range(-p, p + 1) if k != 0)
    return np.array(pts), _weights(pts, n)


def stencil_offsets(n: int, h: float, centered: bool) -> np.ndarray:
    """All sample offsets needed by :func:`richardson` for order ``n`` at step ``h``."""
    pts, _ = stencil(n, centered)
    return np.concatenate([pts * h * f for f in LEVELS])


@dataclass(frozen=True)
class Derivative:
    value: np.ndarray | float
    noise: float


def richardson(samples, n: int, h: float, centered: bool, value_noise: float = 0.0) -> Derivative:
    """Richardson-extrapolated n-th derivative from samples at ``stencil_offsets``.

    ``samples`` has the offsets along axis 0 (any trailing shape). The noise
    estimate combines the spread between the last two extrapolation levels
    with propagated rounding ``value_noise`` per sample.
    """
    pts, w = stencil(n, centered)
    samples = np.asarray(samples)
    k = len(pts)
    D = []
    for level, f in enumerate(LEVELS):
        block = samples[level * k:(level + 1) * k]
        D.append(np.tensordot(w, block, axes=(0, 0)) / (h * f) ** n)
    r1a = (4 * D[1] - D[0]) / 3
    r1b = (4 * D[2] - D[1]) / 3
    r2 = (16 * r1b - r1a) / 15
    spread = float(np.max(np.abs(r2 - r1b)))
    rounding = 1.5 * value_noise * float(np.sum(np.abs(w))) / (h * LEVELS[-1]) ** n
    return Derivative(r2, spread + rounding)


def mixed_offsets(a: int, b: int, h1: float, h2: float) -> np.ndarray:
    """Sample offsets (pairs) for the mixed partial d^a/dx^a d^b/dy^b."""
    p1, _ = stencil(a, True)
    p2, _ = stencil(b, True)
    out = []
    for f in LEVELS:
        for s1 in p1:
            for s2 in p2:
                out.append((s1 * h1 * f, s2 * h2 * f))
    return np.array(out)


def mixed_richardson(samples, a: int, b: int, h1: float, h2: float, value_noise: float = 0.0) -> Derivative:
    """Mixed partial from tensor-product central stencils, both steps halved together."""
    p1, w1 = stencil(a, True)
    p2, w2 = stencil(b, True)
    W = np.outer(w1, w2).ravel()
    k = W.size
    samples = np.asarray(samples)
    D = []
    for level, f in enumerate(LEVELS):
        block = samples[level * k:(level + 1) * k]
        D.append(np.dot(W, block) / ((h1 * f) ** a * (h2 * f) ** b))
    r1a = (4 * D[1] - D[0]) / 3
    r1b = (4 * D[2] - D[1]) / 3
    r2 = (16 * r1b - r1a) / 15
    spread = float(np.max(np.abs(r2 - r1b)))
    rounding = 1.5 * value_noise * float(np.sum(np.abs(W))) / ((h1 * LEVELS[-1]) ** a * (h2 * LEVELS[-1]) ** b)
    return Derivative(r2, spread + rounding)
