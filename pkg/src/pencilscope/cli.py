"""Command-line front end.

Exit codes: 0 clean, 2 when the analysis flagged an ambiguity or an
inconsistency, 1 for usage, IO, parse, schema or invariant errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .branches import default_window, find_crossings, sample_branches
from .errors import InconsistentError, NotSimpleError, PencilscopeError
from .evans import Contour, evans_slope_sign, signature_from_evans, winding_number
from .index import conservation_check, canonical_lower_bound, unstable_count
from .krein import gram_indices, report_from_local, root_chains
from .pencil import PolynomialPencil, characteristic_values, leading_is_invertible
from .problems import Problem, dumps, format_number, load_problem
from .tolerances import Tolerances

COMMANDS = ("branches", "signatures", "chains", "evans", "index", "sweep")


class Context:
    """Resolved options plus a record of flagged ambiguities."""

    def __init__(self, problem: Problem, args):
        self.problem = problem
        self.tol = Tolerances.profile(args.tol_profile).override(**problem.tolerances)
        self.steps = args.steps if args.steps is not None else problem.steps
        self.lambda_min = args.lambda_min
        self.lambda_max = args.lambda_max
        self.contours = list(problem.contours) + list(args.contour or [])
        self.seed = args.seed
        self.flagged = False

    def window(self, pencil) -> tuple[float, float]:
        lo, hi = self.problem.window or default_window(pencil)
        if self.lambda_min is not None:
            lo = self.lambda_min
        if self.lambda_max is not None:
            hi = self.lambda_max
        if not lo < hi:
            raise ValueError("lambda-min must be below lambda-max")
        return lo, hi

    def error_entry(self, exc: PencilscopeError) -> dict:
        if exc.ambiguous:
            self.flagged = True
        return {"code": exc.code, "message": str(exc)}


def _require_selfadjoint(pencil, ctx: Context) -> None:
    from .errors import NotSelfadjointError

    ok = pencil.is_selfadjoint(ctx.tol, seed=ctx.seed) if pencil.kind == "dde" else pencil.is_selfadjoint(ctx.tol)
    if not ok:
        raise NotSelfadjointError("pencil is not selfadjoint")


def _crossings(pencil, ctx: Context):
    _require_selfadjoint(pencil, ctx)
    lo, hi = ctx.window(pencil)
    family = sample_branches(pencil, lo, hi, ctx.steps, ctx.tol)
    return family, find_crossings(pencil, family, ctx.tol)


def _single_pencil(ctx: Context):
    if ctx.problem.kind == "sweep":
        raise ValueError("this command needs a single pencil; use 'sweep' for sweep problems")
    return ctx.problem.pencil()


# ---------------------------------------------------------------------------
# commands


def cmd_branches(ctx: Context, args) -> dict:
    pencil = _single_pencil(ctx)
    family, events = _crossings(pencil, ctx)
    if args.csv:
        write_branch_csv(family, args.csv)
    rows = []
    for ev in events:
        rows.append(
            {
                "lambda": ev.lam0,
                "k": ev.k,
                "alpha": ev.alpha,
                "branches": [
                    {"id": i, "order": m, "sign": s} for i, m, s in zip(ev.branch_ids, ev.orders, ev.signs)
                ],
            }
        )
    lo, hi = ctx.window(pencil)
    return {
        "window": [lo, hi],
        "grid_points": len(family.grid),
        "n_branches": family.n_branches,
        "crossings": rows,
    }


def _gram_column(pencil, lam0: float, kp: int, km: int, ctx: Context):
    if not isinstance(pencil, PolynomialPencil) or not leading_is_invertible(pencil, ctx.tol):
        return None
    try:
        chains = root_chains(pencil, lam0, ctx.tol)
        g = gram_indices(pencil, lam0, chains, ctx.tol)
    except PencilscopeError as exc:
        return {"error": ctx.error_entry(exc)}
    agrees = (g.kappa_plus, g.kappa_minus) == (kp, km)
    if not agrees:
        ctx.flagged = True
    return {"kappa_plus": g.kappa_plus, "kappa_minus": g.kappa_minus, "agrees": agrees}


def cmd_signatures(ctx: Context, args) -> dict:
    pencil = _single_pencil(ctx)
    _, events = _crossings(pencil, ctx)
    rows = []
    for ev in events:
        rep = report_from_local(ev.local)
        rows.append(
            {
                "lambda": ev.lam0,
                "k": ev.k,
                "alpha": rep.alpha,
                "kappa_plus": rep.kappa_plus,
                "kappa_minus": rep.kappa_minus,
                "kappa": rep.kappa,
                "branches": [
                    {"order": b.order, "sign": b.sign, "kappa_plus": b.kappa_plus, "kappa_minus": b.kappa_minus}
                    for b in rep.branches
                ],
                "gram": _gram_column(pencil, ev.lam0, rep.kappa_plus, rep.kappa_minus, ctx),
            }
        )
    return {"values": rows}


def cmd_chains(ctx: Context, args) -> dict:
    pencil = _single_pencil(ctx)
    _, events = _crossings(pencil, ctx)
    rows = []
    for ev in events:
        row: dict = {"lambda": ev.lam0, "branch_orders": sorted(ev.orders, reverse=True)}
        try:
            cs = root_chains(pencil, ev.lam0, ctx.tol)
            row["lengths"] = cs.lengths
            row["alpha"] = cs.algebraic_multiplicity
            row["residuals"] = [c.residual for c in cs.chains]
            row["starters"] = [[[z.real, z.imag] for z in c.starter] for c in cs.chains]
            if sorted(cs.lengths) != sorted(ev.orders):
                ctx.flagged = True
                row["consistent"] = False
            else:
                row["consistent"] = True
        except PencilscopeError as exc:
            row["error"] = ctx.error_entry(exc)
        rows.append(row)
    return {"values": rows}


def cmd_evans(ctx: Context, args) -> dict:
    pencil = _single_pencil(ctx)
    _, events = _crossings(pencil, ctx)
    rows = []
    for ev in events:
        row: dict = {"lambda": ev.lam0, "kappa_graphical": report_from_local(ev.local).kappa}
        try:
            k = signature_from_evans(pencil, ev.lam0, tol=ctx.tol)
            row["kappa_evans"] = k
            row["sign_dD"] = evans_slope_sign(pencil, ev.lam0, ctx.tol)
            row["agrees"] = k == row["kappa_graphical"]
            if not row["agrees"]:
                ctx.flagged = True
        except NotSimpleError as exc:
            row["skipped"] = str(exc)
        except PencilscopeError as exc:
            row["error"] = ctx.error_entry(exc)
        rows.append(row)
    windings = []
    for text in ctx.contours:
        entry: dict = {"contour": text}
        try:
            entry["winding"] = winding_number(pencil, Contour.parse(text), tol=ctx.tol)
        except PencilscopeError as exc:
            entry["error"] = ctx.error_entry(exc)
        windings.append(entry)
    return {"values": rows, "windings": windings}


def _index_dict(rep) -> dict:
    z = rep.z
    return {
        "N": rep.N,
        "N_minus_L": rep.n_minus_L,
        "Z_down_plus": z.down_plus,
        "Z_down_minus": z.down_minus,
        "Z_up_plus": z.up_plus,
        "Z_up_minus": z.up_minus,
        "Z_plus": z.plus,
        "Z_minus": z.minus,
        "kappa_sum_positive": rep.kappa_positive,
        "kappa_sum_negative": rep.kappa_negative,
        "kappa_plus_sum_positive": rep.kappa_plus_positive,
        "kappa_minus_sum_negative": rep.kappa_minus_negative,
        "zeta": rep.zeta,
        "dim_gker_JL": rep.gker,
        "dim_ker_L": rep.ker_L,
        "n_u": rep.n_u,
        "n_u_direct": rep.n_u_direct,
        "n_s": rep.n_s,
        "consistent": rep.consistent,
        "conservation_residual": rep.residual,
    }


def cmd_index(ctx: Context, args) -> dict:
    problem = ctx.problem
    if problem.kind in ("hamiltonian", "canonical_hamiltonian"):
        try:
            rep = unstable_count(problem.system(), ctx.tol, ctx.steps)
            out = _index_dict(rep)
        except InconsistentError as exc:
            ctx.flagged = True
            rep = exc.details.get("report")
            out = _index_dict(rep) if rep is not None else {}
            out["error"] = {"code": exc.code, "message": str(exc)}
        if problem.kind == "canonical_hamiltonian":
            lb = canonical_lower_bound(problem.canonical(), ctx.tol)
            out["lower_bound"] = {
                "bound": lb.bound,
                "N_R": lb.n_real,
                "satisfied": lb.satisfied,
                "N_minus_M_plus": lb.n_minus_M_plus,
                "N_minus_M_minus": lb.n_minus_M_minus,
            }
        return out
    if problem.kind == "polynomial_pencil":
        pencil = problem.pencil()
        rep = conservation_check(pencil, ctx.tol, ctx.steps)
        if rep.residual != 0 or not rep.inequality_holds:
            ctx.flagged = True
        z = rep.z
        return {
            "N": rep.N,
            "N_minus_L0": rep.n_minus_L0,
            "N_plus_Lp": rep.n_plus_Lp,
            "N_minus_Lp": rep.n_minus_Lp,
            "Z_down_plus": z.down_plus,
            "Z_down_minus": z.down_minus,
            "kappa_sum_positive": rep.kappa_positive,
            "kappa_sum_negative": rep.kappa_negative,
            "N_positive": rep.n_positive,
            "N_negative": rep.n_negative,
            "conservation_residual": rep.residual,
            "inequality_holds": rep.inequality_holds,
        }
    raise ValueError(f"index is not defined for {problem.kind} problems")


# ---------------------------------------------------------------------------
# sweep


def collision_log(values, kappas, collision_tol: float) -> list[dict]:
    """Adjacent real characteristic values closer than ``collision_tol``."""
    out = []
    order = np.argsort(values, kind="stable")
    for a, b in zip(order[:-1], order[1:]):
        gap = values[b] - values[a]
        if gap <= collision_tol:
            same = kappas[a] == kappas[b]
            out.append(
                {
                    "lambda": [values[a], values[b]],
                    "gap": gap,
                    "kappa": [kappas[a], kappas[b]],
                    "label": "same-signature (harmless)" if same else "opposite-signature (Hopf-capable)",
                }
            )
    return out


def _sweep_point(ctx: Context, t: float) -> dict:
    pencil = ctx.problem.pencil(t)
    cvals = characteristic_values(pencil, ctx.tol)
    imag_tol = ctx.tol.imag_discard
    all_real = all(abs(v.imag) <= imag_tol * (1 + abs(v)) for v, _ in cvals)
    _, events = _crossings(pencil, ctx)
    lams, kappas, rows = [], [], []
    for ev in events:
        rep = report_from_local(ev.local)
        rows.append({"lambda": ev.lam0, "alpha": rep.alpha, "kappa": rep.kappa})
        lams.append(ev.lam0)
        kappas.append(rep.kappa)
    real_alpha = sum(r["alpha"] for r in rows)
    collisions = collision_log(lams, kappas, ctx.tol.collision_tol)
    if all_real and real_alpha != pencil.dimension * pencil.degree:
        ctx.flagged = True
    return {
        "t": t,
        "all_real": all_real,
        "real_count": real_alpha,
        "values": rows,
        "collisions": collisions,
    }


def cmd_sweep(ctx: Context, args) -> dict:
    problem = ctx.problem
    if problem.kind != "sweep":
        raise ValueError("sweep needs a sweep problem")
    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(lambda t: _sweep_point(ctx, t), problem.parameters))
    else:
        reports = [_sweep_point(ctx, t) for t in problem.parameters]
    return {"parameters": list(problem.parameters), "reports": reports}


def _threads() -> int:
    raw = os.environ.get("PENCILSCOPE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# CSV


def write_branch_csv(family, path) -> None:
    n = family.n_branches
    lines = ["lambda," + ",".join(f"branch_{j}" for j in range(n))]
    for lam, row in zip(family.grid, family.values):
        lines.append(",".join(format_number(x) for x in (lam, *row)))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def branch_csv(problem: Problem, out_path, steps: int | None = None, tol: Tolerances | None = None) -> None:
    pencil = problem.pencil()
    tol = tol or problem.tol()
    lo, hi = problem.window or default_window(pencil)
    family = sample_branches(pencil, lo, hi, steps or problem.steps, tol)
    write_branch_csv(family, out_path)


# ---------------------------------------------------------------------------
# entry point


_HANDLERS = {
    "branches": cmd_branches,
    "signatures": cmd_signatures,
    "chains": cmd_chains,
    "evans": cmd_evans,
    "index": cmd_index,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pencilscope",
        description="Eigenvalue branches, Krein signatures, Evans-Krein functions and index counts for selfadjoint pencils.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--input", required=True, help="problem JSON file or bundled fixture name")
    parser.add_argument("--lambda-min", type=float, default=None)
    parser.add_argument("--lambda-max", type=float, default=None)
    parser.add_argument("--steps", type=int, default=None)
    parser.add_argument("--csv", default=None, help="write matched branch values (branches command)")
    parser.add_argument(
        "--contour", action="append", default=None, help='closed polygon "x0,y0;x1,y1;..." (evans command)'
    )
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--tol-profile", choices=("default", "strict"), default="default")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if args.steps is not None and args.steps < 2:
        print("pencilscope: --steps must be at least 2", file=stderr)
        return 1
    try:
        problem = load_problem(args.input)
    except OSError as exc:
        print(f"pencilscope: cannot read {args.input}: {exc.strerror or exc}", file=stderr)
        return 1
    except PencilscopeError as exc:
        field = exc.details.get("field")
        suffix = f" [field: {field}]" if field else ""
        print(f"pencilscope: {exc.code}: {exc}{suffix}", file=stderr)
        return 1
    ctx = Context(problem, args)
    try:
        body = _HANDLERS[args.command](ctx, args)
    except PencilscopeError as exc:
        if exc.ambiguous:
            out = {"command": args.command, "problem": problem.name, "error": {"code": exc.code, "message": str(exc)}}
            stdout.write(dumps(out))
            return 2
        print(f"pencilscope: {exc.code}: {exc}", file=stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"pencilscope: {exc}", file=stderr)
        return 1
    out = {"command": args.command, "problem": problem.name, "flagged": ctx.flagged}
    out.update(body)
    stdout.write(dumps(out))
    return 2 if ctx.flagged else 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
