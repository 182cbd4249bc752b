"""Problem files: JSON load/validate/serialize and the bundled fixtures.

Complex matrix entries are always two-element ``[re, im]`` arrays.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvariantViolationError, ParseError, PencilscopeError, SchemaError
from .linalg import is_hermitian
from .pencil import (
    CanonicalHamiltonian,
    HamiltonianSystem,
    MatrixPencil,
    PolynomialPencil,
    dde_pencil,
    pencil_from_hamiltonian,
)
from .tolerances import Tolerances

SCHEMA_VERSION = 1
KINDS = ("hamiltonian", "polynomial_pencil", "dde_pencil", "canonical_hamiltonian", "sweep")
FIXTURES = (
    "example1",
    "example2",
    "example3",
    "kreinmatch",
    "kreinmismatch",
    "quadratic1",
    "quadratic2",
    "branchprev",
    "dde_scalar",
)
_REQUIRED = {
    "hamiltonian": ("J", "L"),
    "canonical_hamiltonian": ("L_plus", "L_minus"),
    "dde_pencil": ("A", "B"),
    "sweep": ("A", "B", "J"),
    "polynomial_pencil": (),
}


@dataclass(frozen=True, eq=False)
class Problem:
    kind: str
    matrices: dict
    coefficients: tuple = ()
    tau: float | None = None
    parameters: tuple = ()
    window: tuple | None = None
    steps: int = 400
    tolerances: dict = field(default_factory=dict)
    contours: tuple = ()
    name: str = ""
    description: str = ""

    def tol(self, profile: str = "default") -> Tolerances:
        return Tolerances.profile(profile).override(**self.tolerances)

    def system(self, t: float | None = None) -> HamiltonianSystem:
        if self.kind == "hamiltonian":
            return HamiltonianSystem(self.matrices["J"], self.matrices["L"])
        if self.kind == "canonical_hamiltonian":
            return self.canonical().system()
        if self.kind == "sweep":
            t = 0.0 if t is None else t
            return HamiltonianSystem(self.matrices["J"], self.matrices["A"] + t * self.matrices["B"])
        raise SchemaError(f"a {self.kind} problem has no Hamiltonian system", field="kind")

    def canonical(self) -> CanonicalHamiltonian:
        return CanonicalHamiltonian(self.matrices["L_plus"], self.matrices["L_minus"])

    def pencil(self, t: float | None = None) -> MatrixPencil:
        if self.kind == "polynomial_pencil":
            return PolynomialPencil(self.coefficients)
        if self.kind == "dde_pencil":
            return dde_pencil(self.matrices["A"], self.matrices["B"], self.tau)
        return pencil_from_hamiltonian(self.system(t))

    def to_dict(self) -> dict:
        out: dict = {"schema_version": SCHEMA_VERSION, "kind": self.kind}
        if self.name:
            out["name"] = self.name
        if self.description:
            out["description"] = self.description
        if self.kind == "polynomial_pencil":
            out["coefficients"] = [_encode_matrix(C) for C in self.coefficients]
        else:
            out["matrices"] = {k: _encode_matrix(v) for k, v in self.matrices.items()}
        if self.tau is not None:
            out["tau"] = self.tau
        if self.parameters:
            out["parameters"] = list(self.parameters)
        if self.window is not None:
            out["window"] = list(self.window)
        out["steps"] = self.steps
        if self.tolerances:
            out["tolerances"] = dict(self.tolerances)
        if self.contours:
            out["contours"] = list(self.contours)
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Problem) and self.to_dict() == other.to_dict()

    __hash__ = None


# ---------------------------------------------------------------------------
# encoding


def _encode_matrix(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def _decode_matrix(obj, where: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise SchemaError(f"{where}: expected a non-empty list of rows", field=where)
    rows = []
    for i, row in enumerate(obj):
        if not isinstance(row, list):
            raise SchemaError(f"{where}[{i}]: expected a list of [re, im] pairs", field=f"{where}[{i}]")
        vals = []
        for j, entry in enumerate(row):
            tag = f"{where}[{i}][{j}]"
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
            ):
                raise SchemaError(f"{tag}: expected [re, im] number pair", field=tag)
            if not all(math.isfinite(x) for x in entry):
                raise InvariantViolationError(f"{tag}: entry is not finite", field=tag)
            vals.append(complex(entry[0], entry[1]))
        rows.append(vals)
    n = len(rows)
    for i, r in enumerate(rows):
        if len(r) != n:
            raise InvariantViolationError(f"{where}: matrix is not square (row {i} has {len(r)} entries, expected {n})", field=where)
    return np.array(rows, dtype=complex)


def _number(obj, where: str) -> float:
    if not isinstance(obj, (int, float)) or isinstance(obj, bool):
        raise SchemaError(f"{where}: expected a number", field=where)
    return float(obj)


def problem_from_dict(data, source: str = "<dict>") -> Problem:
    """Validate a decoded problem document; every invariant is checked eagerly."""
    if not isinstance(data, dict):
        raise SchemaError(f"{source}: top level must be an object", field="<root>")
    if "schema_version" not in data:
        raise SchemaError("missing field 'schema_version'", field="schema_version")
    if data["schema_version"] != SCHEMA_VERSION:
        raise SchemaError(
            f"schema_version: expected {SCHEMA_VERSION}, got {data['schema_version']!r}", field="schema_version"
        )
    kind = data.get("kind")
    if kind not in KINDS:
        raise SchemaError(f"kind: expected one of {', '.join(KINDS)}, got {kind!r}", field="kind")

    matrices = {}
    coefficients: tuple = ()
    if kind == "polynomial_pencil":
        coeffs = data.get("coefficients")
        if not isinstance(coeffs, list) or not coeffs:
            raise SchemaError("coefficients: expected a non-empty list of matrices", field="coefficients")
        coefficients = tuple(_decode_matrix(C, f"coefficients[{k}]") for k, C in enumerate(coeffs))
        n = coefficients[0].shape[0]
        for k, C in enumerate(coefficients):
            if C.shape[0] != n:
                raise InvariantViolationError(f"coefficients[{k}]: dimension {C.shape[0]} differs from {n}", field=f"coefficients[{k}]")
    else:
        mats = data.get("matrices")
        if not isinstance(mats, dict):
            raise SchemaError("matrices: expected an object of named matrices", field="matrices")
        for name in _REQUIRED[kind]:
            if name not in mats:
                raise SchemaError(f"matrices.{name}: missing", field=f"matrices.{name}")
        matrices = {name: _decode_matrix(mats[name], f"matrices.{name}") for name in _REQUIRED[kind]}
        extra = set(mats) - set(_REQUIRED[kind])
        if extra:
            raise SchemaError(f"matrices: unexpected entries {sorted(extra)}", field="matrices")
        dims = {name: M.shape[0] for name, M in matrices.items()}
        if len(set(dims.values())) != 1:
            raise InvariantViolationError(f"matrices: inconsistent dimensions {dims}", field="matrices")

    tau = None
    if kind == "dde_pencil":
        if "tau" not in data:
            raise SchemaError("tau: missing", field="tau")
        tau = _number(data["tau"], "tau")
        if not (math.isfinite(tau) and tau > 0):
            raise InvariantViolationError("tau: must be finite and positive", field="tau")

    parameters: tuple = ()
    if kind == "sweep":
        params = data.get("parameters")
        if not isinstance(params, list) or not params:
            raise SchemaError("parameters: expected a non-empty list of numbers", field="parameters")
        parameters = tuple(_number(p, f"parameters[{i}]") for i, p in enumerate(params))

    window = None
    if "window" in data:
        w = data["window"]
        if not isinstance(w, list) or len(w) != 2:
            raise SchemaError("window: expected [lambda_min, lambda_max]", field="window")
        window = (_number(w[0], "window[0]"), _number(w[1], "window[1]"))
        if not window[0] < window[1]:
            raise InvariantViolationError("window: lambda_min must be below lambda_max", field="window")

    steps = data.get("steps", 400)
    if not isinstance(steps, int) or isinstance(steps, bool) or steps < 2:
        raise SchemaError("steps: expected an integer >= 2", field="steps")

    tolerances = data.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise SchemaError("tolerances: expected an object", field="tolerances")
    try:
        Tolerances().override(**tolerances)
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"tolerances: {exc}", field="tolerances") from None

    contours = data.get("contours", [])
    if not isinstance(contours, list) or not all(isinstance(c, str) for c in contours):
        raise SchemaError("contours: expected a list of 'x0,y0;x1,y1;...' strings", field="contours")

    for key in ("name", "description"):
        if key in data and not isinstance(data[key], str):
            raise SchemaError(f"{key}: expected a string", field=key)

    problem = Problem(
        kind=kind,
        matrices=matrices,
        coefficients=coefficients,
        tau=tau,
        parameters=parameters,
        window=window,
        steps=steps,
        tolerances=dict(tolerances),
        contours=tuple(contours),
        name=data.get("name", ""),
        description=data.get("description", ""),
    )
    _check_invariants(problem)
    return problem


def _check_invariants(problem: Problem) -> None:
    kind = problem.kind
    if kind == "polynomial_pencil":
        for k, C in enumerate(problem.coefficients):
            if not is_hermitian(C):
                raise InvariantViolationError(f"coefficients[{k}]: not Hermitian", field=f"coefficients[{k}]")
        PolynomialPencil(problem.coefficients)
    elif kind in ("hamiltonian", "sweep"):
        if kind == "sweep":
            for name in ("A", "B"):
                if not is_hermitian(problem.matrices[name]):
                    raise InvariantViolationError(f"{name}: not Hermitian", field=name)
        sys = problem.system()
        sys.K
    elif kind == "canonical_hamiltonian":
        problem.canonical()
    elif kind == "dde_pencil":
        problem.pencil()


def load_problem(path) -> Problem:
    """Load and validate a problem file. ``path`` may also name a bundled fixture."""
    p = Path(path)
    if not p.exists() and str(path) in FIXTURES:
        return load_fixture(str(path))
    try:
        text = p.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 ({exc})") from None
    return loads(text, str(path))


def loads(text: str, source: str = "<string>") -> Problem:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}", line=exc.lineno) from None
    return problem_from_dict(data, source)


def load_fixture(name: str) -> Problem:
    if name not in FIXTURES:
        raise PencilscopeError(f"unknown fixture {name!r}")
    text = resources.files("pencilscope").joinpath("data", f"{name}.json").read_text(encoding="utf-8")
    return loads(text, f"{name}.json")


def serialize(problem: Problem) -> str:
    return dumps(problem.to_dict())


# ---------------------------------------------------------------------------
# deterministic JSON with 17 significant digits


def format_number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite number {x!r} cannot be written as JSON")
    if x == 0.0:
        return "0.0"
    s = format(x, ".17g")
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def _is_leaf(v) -> bool:
    return v is None or isinstance(v, (str, bool, int, float, np.integer, np.floating, np.bool_))


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits.

    Lists whose items are all scalars (or all short scalar lists) stay on one line.
    """

    def leaf(v) -> str:
        if v is None:
            return "null"
        if isinstance(v, str):
            return json.dumps(v, ensure_ascii=False)
        return format_number(v)

    def inline(v) -> str | None:
        if _is_leaf(v):
            return leaf(v)
        if isinstance(v, (list, tuple)) and all(_is_leaf(x) for x in v):
            return "[" + ", ".join(leaf(x) for x in v) + "]"
        if isinstance(v, (list, tuple)) and all(
            isinstance(x, (list, tuple)) and all(_is_leaf(y) for y in x) for x in v
        ) and v:
            return "[" + ", ".join(inline(x) for x in v) + "]"
        return None

    def render(v, level: int) -> str:
        one = inline(v)
        if one is not None:
            return one
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(v, dict):
            if not v:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {render(val, level + 1)}" for k, val in v.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(v, (list, tuple)):
            if not v:
                return "[]"
            return "[\n" + ",\n".join(pad + render(x, level + 1) for x in v) + "\n" + end + "]"
        if isinstance(v, np.ndarray):
            return render(v.tolist(), level)
        raise TypeError(f"cannot serialize {type(v).__name__}")

    return render(obj, 0) + "\n"
