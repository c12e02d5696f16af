"""Problem specifications: a JSON document, its validation and rendering.

A minimal document::

    {"orders": {"mu": 0.5, "nu": 1.0}, "A": [[1.0]], "x0": [1.0], "T": 1.0, "g": "0"}

Full field list (defaults in brackets):

``orders.mu``, ``orders.nu``
    mu in (0, 1), nu in [0, 1].
``A``
    n x n matrix, row-major list of lists; n = len(x0).
``C`` [0]
    shift, >= 0.
``g``
    expression string (n = 1), list of n expression strings, or
    ``{"catalog": name, "params": {...}}`` with name in linear, logistic,
    constant, sinusoidal.
``impulses`` [[]]
    list of ``{"time": t_k, "phi": <function as for g>}``.
``x0``, ``T``
    weighted initial datum and horizon.
``mesh`` [{"nodes_per_interval": 256, "grading": null}]
    ``null`` grading means max(2, ceil(1/lambda)).
``solver`` [{"tol": 1e-8, "max_iter": 200}]
``tasks`` [["solve"]]
    subset of solve, verify, conditions, gronwall, special-table.
``bounds`` [null]
    ``{"lower": [...], "upper": [...], "weighted": false}``: n expressions
    in t giving the seeds y0 and z0 (raw values unless ``weighted``).
``C_star`` [null]
    Lipschitz-type constant for the uniqueness condition.
``conditions`` [{"samples": 256, "seed": 0}]
``special`` [{"table": "ml", "range": "-5:5:21"}]
    grid for the special-function table.

Every validation error names the offending field as a dotted path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .expr import ExpressionError, parse_expression
from .monotone import Discretization, Impulse, ImpulsiveProblem, WeightedTrajectory
from .operators import Generator
from .specialfn import FractionalOrder

__all__ = [
    "SpecError",
    "SpecSyntaxError",
    "FunctionSpec",
    "ImpulseSpec",
    "ProblemSpec",
    "CATALOG",
    "TASKS",
    "parse_spec",
    "render_spec",
    "build_problem",
    "build_discretization",
    "build_seeds",
    "parse_range",
]

TASKS = ("solve", "verify", "conditions", "gronwall", "special-table")

# name -> (parameter defaults, usable as an impulse map)
CATALOG = {
    "linear": ({"k": 1.0, "c": 0.0}, True),
    "logistic": ({"r": 1.0, "K": 1.0}, True),
    "constant": ({"value": 0.0}, True),
    "sinusoidal": ({"amplitude": 1.0, "omega": 1.0, "phase": 0.0}, False),
}


class SpecError(ValueError):
    """Semantic error in a specification; ``path`` names the field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class SpecSyntaxError(ValueError):
    """The document is not well-formed JSON."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"syntax error at line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class FunctionSpec:
    """Either n expression sources or a catalog entry with parameters."""

    exprs: tuple = ()
    catalog: str | None = None
    params: tuple = ()

    def to_json(self):
        if self.catalog is not None:
            return {"catalog": self.catalog, "params": dict(self.params)}
        return list(self.exprs)


@dataclass(frozen=True)
class ImpulseSpec:
    time: float
    phi: FunctionSpec


@dataclass(frozen=True)
class ProblemSpec:
    mu: float
    nu: float
    A: tuple
    x0: tuple
    T: float
    g: FunctionSpec
    C: float = 0.0
    impulses: tuple = ()
    nodes_per_interval: int = 256
    grading: float | None = None
    tol: float = 1e-8
    max_iter: int = 200
    tasks: tuple = ("solve",)
    lower: tuple | None = None
    upper: tuple | None = None
    bounds_weighted: bool = False
    C_star: float | None = None
    samples: int = 256
    seed: int = 0
    special_table: str = "ml"
    special_range: str = "-5:5:21"

    @property
    def n(self) -> int:
        return len(self.x0)

    def replace(self, **changes) -> "ProblemSpec":
        data = dict(self.__dict__)
        data.update(changes)
        return ProblemSpec(**data)


# --------------------------------------------------------------------------
# parsing helpers


def _obj(value, path, allowed):
    if not isinstance(value, dict):
        raise SpecError(path, "expected an object")
    for key in value:
        if key not in allowed:
            raise SpecError(f"{path}.{key}" if path else key, "unknown field")
    return value


def _num(value, path, lo=None, hi=None, lo_open=False, hi_open=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(path, "expected a number")
    value = float(value)
    if not math.isfinite(value):
        raise SpecError(path, "must be finite")
    if lo is not None and (value < lo or (lo_open and value == lo)):
        raise SpecError(path, f"must be {'>' if lo_open else '>='} {lo}")
    if hi is not None and (value > hi or (hi_open and value == hi)):
        raise SpecError(path, f"must be {'<' if hi_open else '<='} {hi}")
    return value


def _int(value, path, lo):
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecError(path, "expected an integer")
    if value < lo:
        raise SpecError(path, f"must be >= {lo}")
    return value


def _exprs(value, path, n):
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SpecError(path, "expected an expression string or a list of them")
    if len(value) != n:
        raise SpecError(path, f"expected {n} expression(s), got {len(value)}")
    for i, src in enumerate(value):
        try:
            parse_expression(src, n)
        except ExpressionError as exc:
            raise SpecError(f"{path}[{i}]", str(exc)) from exc
    return tuple(value)


def _function(value, path, n, impulse=False):
    if isinstance(value, dict):
        _obj(value, path, ("catalog", "params"))
        name = value.get("catalog")
        if name not in CATALOG:
            raise SpecError(f"{path}.catalog", f"unknown catalog entry {name!r}; choose from {sorted(CATALOG)}")
        defaults, impulse_ok = CATALOG[name]
        if impulse and not impulse_ok:
            raise SpecError(f"{path}.catalog", f"{name!r} is not available for impulse maps")
        params = _obj(value.get("params", {}), f"{path}.params", tuple(defaults))
        merged = dict(defaults)
        for key, val in params.items():
            merged[key] = _num(val, f"{path}.params.{key}")
        return FunctionSpec((), name, tuple(sorted(merged.items())))
    return FunctionSpec(_exprs(value, path, n))


def parse_range(text: str, path: str = "range"):
    """'a:b:n' -> (a, b, n) with n >= 2 and a < b."""
    parts = text.split(":") if isinstance(text, str) else []
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (IndexError, ValueError):
        raise SpecError(path, "expected 'start:stop:count'") from None
    if len(parts) != 3 or not (math.isfinite(a) and math.isfinite(b)) or n < 2 or not a < b:
        raise SpecError(path, "expected 'start:stop:count' with start < stop and count >= 2")
    return a, b, n


_TOP = ("orders", "A", "C", "g", "impulses", "x0", "T", "mesh", "solver", "tasks", "bounds", "C_star",
        "conditions", "special")


def parse_spec(text: str) -> ProblemSpec:
    """Parse and fully validate a JSON specification.

    Raises
    ------
    SpecSyntaxError
        Malformed JSON, with line and column.
    SpecError
        Any semantic problem, with the dotted path of the field.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    _obj(doc, "", _TOP)
    for key in ("orders", "A", "x0", "T", "g"):
        if key not in doc:
            raise SpecError(key, "required field missing")

    orders = _obj(doc["orders"], "orders", ("mu", "nu"))
    for key in ("mu", "nu"):
        if key not in orders:
            raise SpecError(f"orders.{key}", "required field missing")
    mu = _num(orders["mu"], "orders.mu", 0.0, 1.0, lo_open=True, hi_open=True)
    nu = _num(orders["nu"], "orders.nu", 0.0, 1.0)

    if not isinstance(doc["x0"], list) or not doc["x0"]:
        raise SpecError("x0", "expected a nonempty list of numbers")
    x0 = tuple(_num(v, f"x0[{i}]") for i, v in enumerate(doc["x0"]))
    n = len(x0)

    A = doc["A"]
    if not isinstance(A, list) or len(A) != n:
        raise SpecError("A", f"expected {n} rows to match x0")
    rows = []
    for i, row in enumerate(A):
        if not isinstance(row, list) or len(row) != n:
            raise SpecError(f"A[{i}]", f"expected a row of {n} numbers")
        rows.append(tuple(_num(v, f"A[{i}][{j}]") for j, v in enumerate(row)))
    T = _num(doc["T"], "T", 0.0, lo_open=True)
    C = _num(doc.get("C", 0.0), "C", 0.0)
    g = _function(doc["g"], "g", n)

    imps = doc.get("impulses", [])
    if not isinstance(imps, list):
        raise SpecError("impulses", "expected a list")
    impulses = []
    prev = 0.0
    for i, item in enumerate(imps):
        path = f"impulses[{i}]"
        _obj(item, path, ("time", "phi"))
        if "time" not in item or "phi" not in item:
            raise SpecError(path, "needs 'time' and 'phi'")
        t = _num(item["time"], f"{path}.time")
        if not 0.0 < t < T:
            raise SpecError(f"{path}.time", f"impulse times must lie strictly inside (0, T={T})")
        if t <= prev and i:
            raise SpecError(f"{path}.time", "impulse times must increase strictly")
        prev = t
        impulses.append(ImpulseSpec(t, _function(item["phi"], f"{path}.phi", n, impulse=True)))

    mesh = _obj(doc.get("mesh", {}), "mesh", ("nodes_per_interval", "grading"))
    nodes = _int(mesh.get("nodes_per_interval", 256), "mesh.nodes_per_interval", 2)
    grading = mesh.get("grading")
    grading = None if grading is None else _num(grading, "mesh.grading", 1.0)

    solver = _obj(doc.get("solver", {}), "solver", ("tol", "max_iter"))
    tol = _num(solver.get("tol", 1e-8), "solver.tol", 0.0, lo_open=True)
    max_iter = _int(solver.get("max_iter", 200), "solver.max_iter", 1)

    tasks = doc.get("tasks", ["solve"])
    if not isinstance(tasks, list) or not tasks:
        raise SpecError("tasks", "expected a nonempty list")
    for i, task in enumerate(tasks):
        if task not in TASKS:
            raise SpecError(f"tasks[{i}]", f"unknown task {task!r}; choose from {list(TASKS)}")
    if len(set(tasks)) != len(tasks):
        raise SpecError("tasks", "tasks must not repeat")

    lower = upper = None
    weighted = False
    if doc.get("bounds") is not None:
        bounds = _obj(doc["bounds"], "bounds", ("lower", "upper", "weighted"))
        if "lower" not in bounds or "upper" not in bounds:
            raise SpecError("bounds", "needs both 'lower' and 'upper'")
        lower = _exprs(bounds["lower"], "bounds.lower", n)
        upper = _exprs(bounds["upper"], "bounds.upper", n)
        weighted = bounds.get("weighted", False)
        if not isinstance(weighted, bool):
            raise SpecError("bounds.weighted", "expected true or false")

    C_star = doc.get("C_star")
    C_star = None if C_star is None else _num(C_star, "C_star", 0.0)

    cond = _obj(doc.get("conditions", {}), "conditions", ("samples", "seed"))
    samples = _int(cond.get("samples", 256), "conditions.samples", 1)
    seed = _int(cond.get("seed", 0), "conditions.seed", 0)

    special = _obj(doc.get("special", {}), "special", ("table", "range"))
    table = special.get("table", "ml")
    if table not in ("ml", "xi"):
        raise SpecError("special.table", "expected 'ml' or 'xi'")
    rng = special.get("range", "-5:5:21")
    parse_range(rng, "special.range")

    for task in ("verify", "conditions"):
        if task in tasks and lower is None:
            raise SpecError("bounds", f"task {task!r} needs lower and upper bounds")
    if "gronwall" in tasks and (lower is None or C_star is None):
        raise SpecError("C_star", "task 'gronwall' needs bounds and C_star")

    return ProblemSpec(
        mu=mu, nu=nu, A=tuple(rows), x0=x0, T=T, g=g, C=C, impulses=tuple(impulses),
        nodes_per_interval=nodes, grading=grading, tol=tol, max_iter=max_iter, tasks=tuple(tasks),
        lower=lower, upper=upper, bounds_weighted=weighted, C_star=C_star, samples=samples, seed=seed,
        special_table=table, special_range=rng,
    )


def render_spec(spec: ProblemSpec) -> str:
    """Canonical JSON text; ``parse_spec(render_spec(s)) == s``."""
    doc = {
        "orders": {"mu": spec.mu, "nu": spec.nu},
        "A": [list(r) for r in spec.A],
        "C": spec.C,
        "g": spec.g.to_json(),
        "impulses": [{"time": imp.time, "phi": imp.phi.to_json()} for imp in spec.impulses],
        "x0": list(spec.x0),
        "T": spec.T,
        "mesh": {"nodes_per_interval": spec.nodes_per_interval, "grading": spec.grading},
        "solver": {"tol": spec.tol, "max_iter": spec.max_iter},
        "tasks": list(spec.tasks),
        "bounds": None if spec.lower is None else {
            "lower": list(spec.lower), "upper": list(spec.upper), "weighted": spec.bounds_weighted,
        },
        "C_star": spec.C_star,
        "conditions": {"samples": spec.samples, "seed": spec.seed},
        "special": {"table": spec.special_table, "range": spec.special_range},
    }
    return json.dumps(doc, indent=2) + "\n"


# --------------------------------------------------------------------------
# building numerics from a spec


def _catalog_fn(name, params):
    p = dict(params)
    if name == "linear":
        return lambda t, x: p["k"] * x + p["c"]
    if name == "logistic":
        return lambda t, x: p["r"] * x * (1.0 - x / p["K"])
    if name == "constant":
        return lambda t, x: np.full_like(x, p["value"])
    if name == "sinusoidal":
        return lambda t, x: np.broadcast_to(
            (p["amplitude"] * np.sin(p["omega"] * np.asarray(t) + p["phase"]))[..., None], x.shape
        ).copy()
    raise KeyError(name)


def _vector_fn(fs: FunctionSpec, n: int):
    """f(t, x) with t shape (m,) and x shape (m, n) -> (m, n)."""
    if fs.catalog is not None:
        return _catalog_fn(fs.catalog, fs.params)
    exprs = [parse_expression(src, n) for src in fs.exprs]

    def f(t, x):
        return np.stack([e(t, x) for e in exprs], axis=-1)

    return f


def build_problem(spec: ProblemSpec) -> ImpulsiveProblem:
    n = spec.n
    g = _vector_fn(spec.g, n)
    impulses = []
    for imp in spec.impulses:
        f = _vector_fn(imp.phi, n)
        impulses.append(Impulse(imp.time, lambda x, f=f, t=imp.time: f(np.array([t]), np.asarray(x)[None, :])[0]))
    return ImpulsiveProblem(
        FractionalOrder(spec.mu, spec.nu), Generator(np.array(spec.A), spec.C), g, tuple(impulses),
        np.array(spec.x0), spec.T, vectorized=True,
    )


def build_discretization(spec: ProblemSpec, problem: ImpulsiveProblem) -> Discretization:
    return Discretization.for_problem(problem, spec.nodes_per_interval, spec.grading)


def build_seeds(spec: ProblemSpec, disc: Discretization):
    """(y0, z0) from the bound expressions, or ``None`` without bounds."""
    if spec.lower is None:
        return None
    n = spec.n
    out = []
    for srcs in (spec.lower, spec.upper):
        exprs = [parse_expression(s, n) for s in srcs]
        x = np.zeros((disc.size, n))
        vals = np.stack([e(disc.times, x) for e in exprs], axis=-1)
        out.append(WeightedTrajectory(disc, vals) if spec.bounds_weighted else WeightedTrajectory.from_raw(disc, vals))
    return tuple(out)
