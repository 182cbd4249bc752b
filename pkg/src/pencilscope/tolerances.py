"""Numerical tolerance profiles shared by all analyses."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    """Scale-aware thresholds. Relative values multiply a problem norm."""

    hermitian_rel: float = 1e-12
    jacobi_offdiag_rel: float = 1e-13
    jacobi_max_sweeps: int = 100
    inertia_rel: float = 1e-9
    cluster_rel: float = 1e-7
    leading_det_rel: float = 1e-10
    overlap_refine: float = 0.9
    overlap_floor: float = 0.6
    h_min_rel: float = 1e-7
    crossing_rel: float = 1e-9
    kernel_rel: float = 1e-8
    branch_step_rel: float = 1e-3
    max_order: int = 6
    rank_tol: float = 1e-8
    chain_tol: float = 1e-8
    evans_step_rel: float = 1e-4
    noise_factor: float = 10.0
    imag_discard: float = 1e-6
    re_tol_rel: float = 1e-7
    winding_margin_rel: float = 1e-12
    winding_max_refine: int = 40
    kernel_angle_tol: float = 1e-8
    collision_tol: float = 0.05

    @classmethod
    def strict(cls) -> "Tolerances":
        """Tighter classification thresholds and finer refinement."""
        return cls(
            inertia_rel=1e-11,
            cluster_rel=1e-8,
            h_min_rel=1e-9,
            crossing_rel=1e-11,
            kernel_rel=1e-9,
            rank_tol=1e-9,
            chain_tol=1e-10,
        )

    @classmethod
    def profile(cls, name: str) -> "Tolerances":
        if name == "default":
            return cls()
        if name == "strict":
            return cls.strict()
        raise ValueError(f"unknown tolerance profile {name!r}")

    def override(self, **values) -> "Tolerances":
        """Return a copy with the named fields replaced; unknown names raise."""
        known = {f.name for f in fields(self)}
        unknown = set(values) - known
        if unknown:
            raise KeyError(f"unknown tolerance field(s): {sorted(unknown)}")
        return replace(self, **values)


DEFAULT = Tolerances()


def resolve(tol: Tolerances | None) -> Tolerances:
    return DEFAULT if tol is None else tol
