"""Command-line front end.

Subcommands::

    solve <spec> --out <dir>
    verify <spec> --side lower|upper --candidate <csv>
    conditions <spec> [--samples N] [--seed S]
    gronwall --a <csv> --b <real> --beta <real>
    special --table ml|xi --mu <real> --range a:b:n

``--tol``, ``--max-iter``, ``--mesh-n`` and ``--grading`` override the
spec's solver and mesh settings. Exit status: 0 success, 2 when a
structural condition or a lower/upper check fails (reports are still
written), 1 on errors.

Output files of ``solve`` (see README for the field reference):

``solution.csv``
    columns interval_index, t, weighted, lower_1..lower_n, upper_1..upper_n.
    Rows with weighted = 1 hold (t - t_k)^(1-lambda) x(t) instead of x(t);
    that happens when lambda < 1 within the first 1% of an interval, where
    raw values blow up.
``report.json``
    deterministic (no timestamps): identical inputs give identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from .config import (
    SpecError,
    SpecSyntaxError,
    build_discretization,
    build_problem,
    build_seeds,
    parse_range,
    parse_spec,
    render_spec,
)
from .exceptions import IterationConvergenceError
from .fracquad import IntervalMesh, SampledFunction
from .gronwall import GronwallData, ml_kernel_bound
from .monotone import (
    WeightedTrajectory,
    check_conditions,
    fixed_point,
    iterate_extremal,
    uniqueness_certificate,
    verify_lower_upper,
)
from .specialfn import ml_array, xi_array

__all__ = ["main", "run", "write_atomic", "solution_rows"]

EXIT_OK, EXIT_ERROR, EXIT_CONDITION = 0, 1, 2
_WEIGHTED_FRACTION = 0.01


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _clean(obj):
    """JSON-safe copy: tuples to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def solution_rows(lo: WeightedTrajectory, hi: WeightedTrajectory, lam: float):
    disc = lo.disc
    n = lo.n
    header = ["interval_index", "t", "weighted"] + [f"lower_{i + 1}" for i in range(n)] + [f"upper_{i + 1}" for i in range(n)]
    lengths = np.array([m.t_end - m.t_start for m in disc.meshes])[disc.interval_index]
    flag = (lam < 1.0) & (disc.times - disc.left <= _WEIGHTED_FRACTION * lengths)
    lo_raw, hi_raw = lo.raw(), hi.raw()
    rows = []
    for j in range(disc.size):
        a = lo.weighted[j] if flag[j] else lo_raw[j]
        b = hi.weighted[j] if flag[j] else hi_raw[j]
        rows.append([str(int(disc.interval_index[j])), _fmt(disc.times[j]), "1" if flag[j] else "0"]
                    + [_fmt(v) for v in a] + [_fmt(v) for v in b])
    return header, rows


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _special_table(table: str, mu: float, rng: str):
    a, b, n = parse_range(rng)
    grid = np.linspace(a, b, n)
    if table == "ml":
        header = ["z", "E_mu_1", "E_mu_mu"]
        cols = [grid, ml_array(mu, 1.0, grid), ml_array(mu, mu, grid)]
    else:
        if a < 0:
            raise ValueError("xi table needs a nonnegative range")
        header = ["theta", "xi"]
        cols = [grid, xi_array(mu, grid)]
    rows = [[_fmt(c[i]) for c in cols] for i in range(n)]
    return header, rows


def _solve(spec, problem, disc, seeds, report):
    """Returns (lo, hi) or raises IterationConvergenceError."""
    if seeds is not None:
        lo, hi, rep = iterate_extremal(problem, seeds[0], seeds[1], spec.tol, spec.max_iter)
        report["solve"] = {"method": "monotone", **rep.as_dict()}
    else:
        start = WeightedTrajectory.constant(disc, np.zeros(problem.n))
        x, it = fixed_point(problem, start, spec.tol, spec.max_iter)
        from .monotone import apply_G

        report["solve"] = {
            "method": "picard",
            "iterations": it,
            "converged": True,
            "fixed_point_residual": apply_G(problem, x).distance(x),
        }
        lo = hi = x
    return lo, hi


def run(spec, out_dir) -> int:
    """Execute the spec's tasks, writing outputs into ``out_dir``.

    Returns the exit status (0, 1 or 2). ``report.json`` is written even
    when a task fails, unless the directory itself is unusable.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"directory {out} is not writable")
    except OSError as exc:
        print(f"error: cannot use output directory {out}: {exc}", file=sys.stderr)
        return EXIT_ERROR

    report = {"format_version": 1, "spec": json.loads(render_spec(spec)), "tasks": list(spec.tasks)}
    status = EXIT_OK
    caught = []
    try:
        with warnings.catch_warnings(record=True) as wlist:
            warnings.simplefilter("always")
            problem = build_problem(spec)
            disc = build_discretization(spec, problem)
            seeds = build_seeds(spec, disc)
            report["mesh"] = {
                "intervals": len(disc.meshes),
                "nodes_per_interval": spec.nodes_per_interval,
                "grading": disc.meshes[0].grading,
                "total_nodes": disc.size,
                "lambda": problem.lam,
            }
            sol = None
            if "solve" in spec.tasks:
                sol = _solve(spec, problem, disc, seeds, report)
                header, rows = solution_rows(sol[0], sol[1], problem.lam)
                write_atomic(out / "solution.csv", _csv_text(header, rows))
            if "verify" in spec.tasks:
                sides = {}
                for name, cand in (("lower", seeds[0]), ("upper", seeds[1])):
                    r = verify_lower_upper(problem, cand, name, slack=10 * spec.tol)
                    sides[name] = _clean(r.__dict__)
                    if not r.passes:
                        status = EXIT_CONDITION
                report["verify"] = sides
            if "conditions" in spec.tasks:
                cr = check_conditions(problem, seeds[0], seeds[1], None, spec.C_star, spec.samples, spec.seed)
                report["conditions"] = _clean(cr.as_dict())
                if not cr.ok():
                    status = EXIT_CONDITION
            if "gronwall" in spec.tasks:
                if sol is None:
                    sol = _solve(spec, problem, disc, seeds, report)
                cert = uniqueness_certificate(problem, sol[0], sol[1], spec.C_star, spec.tol, spec.samples, spec.seed)
                report["uniqueness"] = _clean(cert.as_dict())
                if not cert.conditions_ok:
                    status = EXIT_CONDITION
            if "special-table" in spec.tasks:
                header, rows = _special_table(spec.special_table, spec.mu, spec.special_range)
                write_atomic(out / "special_table.csv", _csv_text(header, rows))
            caught = [f"{w.category.__name__}: {w.message}" for w in wlist]
    except IterationConvergenceError as exc:
        report["error"] = str(exc)
        if exc.report is not None:
            report["solve"] = {"method": "monotone", **exc.report.as_dict()}
        status = EXIT_ERROR
    except (ValueError, ArithmeticError, OSError) as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        status = EXIT_ERROR
    report["warnings"] = sorted(set(caught))
    report["exit_status"] = status
    try:
        write_atomic(out / "report.json", json.dumps(_clean(report), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if "error" in report:
        print(f"error: {report['error']}", file=sys.stderr)
    return status


# --------------------------------------------------------------------------
# argument handling


def _load_spec(path, args):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError("<file>", f"cannot read {path}: {exc}") from None
    spec = parse_spec(text)
    changes = {}
    if getattr(args, "tol", None) is not None:
        if not args.tol > 0:
            raise SpecError("--tol", "must be > 0")
        changes["tol"] = args.tol
    if getattr(args, "max_iter", None) is not None:
        if args.max_iter < 1:
            raise SpecError("--max-iter", "must be >= 1")
        changes["max_iter"] = args.max_iter
    if getattr(args, "mesh_n", None) is not None:
        if args.mesh_n < 2:
            raise SpecError("--mesh-n", "must be >= 2")
        changes["nodes_per_interval"] = args.mesh_n
    if getattr(args, "grading", None) is not None:
        if args.grading < 1:
            raise SpecError("--grading", "must be >= 1")
        changes["grading"] = args.grading
    return spec.replace(**changes) if changes else spec


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    if data.size == 0:
        raise ValueError(f"{path} has no data rows")
    return header, data


def _candidate(path, side, disc, n, lam):
    """Candidate trajectory on ``disc`` from a CSV.

    Accepts solution.csv (columns lower_i/upper_i, chosen by ``side``) or a
    plain table with columns t, x_1..x_n and an optional weighted flag.
    Values are interpolated linearly, in weighted form, within each
    interval.
    """
    header, data = _read_csv(path)
    col = {h: i for i, h in enumerate(header)}
    if "t" not in col:
        raise ValueError("candidate CSV needs a 't' column")
    prefix = f"{side}_" if f"{side}_1" in col else "x_"
    names = [f"{prefix}{i + 1}" for i in range(n)]
    missing = [c for c in names if c not in col]
    if missing:
        raise ValueError(f"candidate CSV lacks columns {missing}")
    t = data[:, col["t"]]
    vals = data[:, [col[c] for c in names]]
    flags = data[:, col["weighted"]] if "weighted" in col else np.zeros(t.size)
    bps = disc.breakpoints
    k = np.clip(np.searchsorted(bps, t, side="left") - 1, 0, len(bps) - 2)
    weight = (t - np.array(bps)[k]) ** (1.0 - lam)
    w = np.where(flags[:, None] > 0, vals, vals * weight[:, None])
    out = np.empty((disc.size, n))
    for q in range(len(disc.meshes)):
        sel = k == q
        if not sel.any():
            raise ValueError(f"candidate CSV has no rows in interval {q}")
        sl = disc.interval_slice(q)
        order = np.argsort(t[sel])
        for i in range(n):
            out[sl, i] = np.interp(disc.times[sl], t[sel][order], w[sel][order, i])
    return WeightedTrajectory(disc, out)


def _add_overrides(p):
    p.add_argument("--tol", type=float, help="iteration tolerance (overrides solver.tol)")
    p.add_argument("--max-iter", type=int, dest="max_iter", help="iteration cap (overrides solver.max_iter)")
    p.add_argument("--mesh-n", type=int, dest="mesh_n", help="nodes per impulse interval")
    p.add_argument("--grading", type=float, help="mesh grading exponent r >= 1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hilfer-extremal",
        description="Extremal mild solutions of impulsive Hilfer-type fractional systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the tasks of a spec and write solution.csv and report.json")
    p.add_argument("spec")
    p.add_argument("--out", required=True, help="output directory")
    _add_overrides(p)

    p = sub.add_parser("verify", help="check a candidate lower or upper solution")
    p.add_argument("spec")
    p.add_argument("--side", choices=("lower", "upper"), required=True)
    p.add_argument("--candidate", required=True, help="CSV with t and x_1..x_n, or a solution.csv")
    _add_overrides(p)

    p = sub.add_parser("conditions", help="sample the monotonicity and Lipschitz conditions")
    p.add_argument("spec")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    _add_overrides(p)

    p = sub.add_parser("gronwall", help="evaluate the fractional Gronwall bound for sampled forcing")
    p.add_argument("--a", required=True, help="CSV with columns t,a (t > 0 increasing)")
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)

    p = sub.add_parser("special", help="tabulate Mittag-Leffler or xi values")
    p.add_argument("--table", choices=("ml", "xi"), required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--range", required=True, dest="range_", metavar="A:B:N")
    return parser


def _print_json(obj):
    print(json.dumps(_clean(obj), indent=2, sort_keys=True))


def _join_range(argv):
    """Let ``--range -1:1:5`` through argparse, which would read it as a flag."""
    out = list(argv)
    for i, tok in enumerate(out[:-1]):
        if tok == "--range":
            out[i:i + 2] = [f"--range={out[i + 1]}"]
            break
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    args = build_parser().parse_args(_join_range(argv))
    try:
        if args.command == "solve":
            return run(_load_spec(args.spec, args), args.out)
        if args.command == "verify":
            spec = _load_spec(args.spec, args)
            problem = build_problem(spec)
            disc = build_discretization(spec, problem)
            cand = _candidate(args.candidate, args.side, disc, problem.n, problem.lam)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                rep = verify_lower_upper(problem, cand, args.side, slack=10 * spec.tol)
            _print_json(rep.__dict__)
            return EXIT_OK if rep.passes else EXIT_CONDITION
        if args.command == "conditions":
            spec = _load_spec(args.spec, args)
            if spec.lower is None:
                raise SpecError("bounds", "the conditions command needs lower and upper bounds")
            problem = build_problem(spec)
            disc = build_discretization(spec, problem)
            y0, z0 = build_seeds(spec, disc)
            samples = spec.samples if args.samples is None else args.samples
            seed = spec.seed if args.seed is None else args.seed
            cr = check_conditions(problem, y0, z0, None, spec.C_star, samples, seed)
            _print_json(cr.as_dict())
            return EXIT_OK if cr.ok() else EXIT_CONDITION
        if args.command == "gronwall":
            header, data = _read_csv(args.a)
            if data.shape[1] < 2:
                raise ValueError("forcing CSV needs columns t,a")
            t, a = data[:, 0], data[:, 1]
            mesh = IntervalMesh(0.0, float(t[-1]), t)
            bound = ml_kernel_bound(GronwallData(SampledFunction(mesh, a), args.b, args.beta), t)
            rows = [[_fmt(ti), _fmt(ai), _fmt(bi)] for ti, ai, bi in zip(t, a, bound)]
            sys.stdout.write(_csv_text(["t", "a", "bound"], rows))
            return EXIT_OK
        if args.command == "special":
            if not 0 < args.mu < 1:
                raise ValueError("--mu must lie in (0, 1)")
            header, rows = _special_table(args.table, args.mu, args.range_)
            sys.stdout.write(_csv_text(header, rows))
            return EXIT_OK
    except SpecSyntaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (SpecError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
