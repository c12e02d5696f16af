"""Monotone iteration for impulsive Hilfer-type evolution systems.

The problem is

    D^{mu,nu} x + A x = g(t, x),      t in (t_k, t_{k+1}],
    x(t_k+) - x(t_k) = phi_k(x(t_k)),  k = 1..l,
    I^{1-lambda} x (0+) = x0,

rewritten with a shift C >= 0 (stored on the generator) as the fixed point
x = G x of the mild-solution operator

    (G x)(t) = S*(t) x0 + sum_{t_i < t} S*(t - t_i) phi_i(x(t_i))
               + int_0^t (t - s)^(mu-1) P*(t - s) [g(s, x(s)) + C x(s)] ds.

When g + C x is increasing in x, the phi_i are increasing and the
semigroup is positive, G is monotone. Iterating it from a lower solution
y0 and an upper solution z0 produces an increasing chain y_p and a
decreasing chain z_p that bracket every mild solution in [y0, z0] and
converge to the minimal and maximal solutions.

Trajectories are stored in weighted form, w(t) = (t - t_k)^(1-lambda) x(t)
on (t_k, t_{k+1}], because raw values blow up at each t_k when lambda < 1.
Norms are sup norms of weighted values, order relations componentwise
(nonnegative-orthant cone, normal constant 1).

Discretization: every interval gets a graded mesh, and G becomes an affine
map on the node values. Its matrices (S* at the nodes, the propagated
impulse operators and the convolution weights) are built once per
(problem, discretization) pair and cached. All convolution weights are
products of positive quadrature weights with P* values, so for positive
semigroups the discrete G is monotone exactly, not just up to quadrature
error.
"""

from __future__ import annotations

import math
import threading
import warnings
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import IterationConvergenceError, OrderingWarning
from .fracquad import IntervalMesh, SampledFunction, convolution_matrix, hilfer_derivative
from .gronwall import GronwallData, ml_kernel_bound
from .operators import (
    Generator,
    OperatorFamily,
    OperatorKernel,
    _ml_family,
    estimate_bound_constant,
)
from .specialfn import FractionalOrder, ml_array

__all__ = [
    "Impulse",
    "ImpulsiveProblem",
    "Discretization",
    "WeightedTrajectory",
    "EnclosureReport",
    "ConditionReport",
    "SideReport",
    "UniquenessCertificate",
    "apply_G",
    "fixed_point",
    "iterate_extremal",
    "verify_lower_upper",
    "check_conditions",
    "uniqueness_certificate",
]


@dataclass(frozen=True)
class Impulse:
    """Jump x(t+) - x(t) = phi(x(t)) at ``time``; ``phi`` maps R^n to R^n."""

    time: float
    phi: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ImpulsiveProblem:
    """Problem data.

    Parameters
    ----------
    ord : FractionalOrder
    gen : Generator
        A and the shift C used in the mild formula.
    g : callable
        ``g(t, x)`` with ``t`` a float and ``x`` of shape (n,), returning
        shape (n,). With ``vectorized=True`` it is called once with ``t`` of
        shape (m,) and ``x`` of shape (m, n) and must return (m, n). It must
        be pure: same inputs, same outputs, no side effects.
    impulses : sequence of Impulse
        Strictly increasing times inside (0, T).
    x0 : array_like
        Weighted initial datum, the value of I^{1-lambda} x at 0+.
    T : float
        Horizon.
    bound_constant : float, optional
        M* with ||e^{-(A + C I) t}||_inf <= M* on [0, T]; estimated on a
        grid when omitted.
    """

    ord: FractionalOrder
    gen: Generator
    g: Callable
    impulses: tuple = ()
    x0: np.ndarray = field(default_factory=lambda: np.zeros(1))
    T: float = 1.0
    vectorized: bool = False
    bound_constant: float | None = None

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if x0.shape != (self.gen.n,):
            raise ValueError(f"x0 has shape {x0.shape}, expected ({self.gen.n},)")
        if not np.all(np.isfinite(x0)):
            raise ValueError("x0 must be finite")
        object.__setattr__(self, "x0", x0)
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        imps = tuple(self.impulses)
        times = [imp.time for imp in imps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("impulse times must be strictly increasing")
        if times and not (0 < times[0] and times[-1] < self.T):
            raise ValueError("impulse times must lie strictly inside (0, T)")
        object.__setattr__(self, "impulses", imps)

    @property
    def n(self) -> int:
        return self.gen.n

    @property
    def lam(self) -> float:
        return self.ord.lam

    @property
    def breakpoints(self) -> tuple:
        return (0.0,) + tuple(imp.time for imp in self.impulses) + (float(self.T),)

    @property
    def family(self) -> OperatorFamily:
        fam = _FAMILIES.get(self)
        if fam is None:
            M = self.bound_constant
            if M is None:
                M = estimate_bound_constant(self.gen, self.T, norm=np.inf)
            fam = OperatorFamily(self.ord, self.gen, bound_constant=M)
            _FAMILIES[self] = fam
        return fam

    def with_shift(self, C: float) -> "ImpulsiveProblem":
        """Same problem, mild formula rewritten with shift C."""
        return ImpulsiveProblem(self.ord, self.gen.with_shift(C), self.g, self.impulses, self.x0, self.T, self.vectorized)

    def eval_g(self, t, x) -> np.ndarray:
        """g at rows of ``x`` (shape (m, n)) and times ``t`` (shape (m,))."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        if self.vectorized:
            out = np.asarray(self.g(t, x), dtype=float)
            out = np.broadcast_to(out, x.shape) if out.ndim == 0 else out
        else:
            out = np.array([np.broadcast_to(np.asarray(self.g(float(ti), xi), dtype=float), (self.n,)) for ti, xi in zip(t, x)])
        if out.shape != x.shape:
            raise ValueError(f"g returned shape {out.shape}, expected {x.shape}")
        if not np.all(np.isfinite(out)):
            raise ValueError("g returned non-finite values")
        return out


_FAMILIES: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _default_grading(lam: float) -> float:
    return float(max(2, math.ceil(1.0 / lam)))


@dataclass(frozen=True, eq=False)
class Discretization:
    """One graded mesh per interval (t_k, t_{k+1}] between breakpoints."""

    meshes: tuple
    lam: float

    def __post_init__(self):
        meshes = tuple(self.meshes)
        for a, b in zip(meshes, meshes[1:]):
            if a.t_end != b.t_start:
                raise ValueError("meshes must tile (0, T] without gaps")
        object.__setattr__(self, "meshes", meshes)
        times = np.concatenate([m.nodes for m in meshes])
        sizes = [m.size for m in meshes]
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        index = np.repeat(np.arange(len(meshes)), sizes)
        left = np.array([m.t_start for m in meshes])[index]
        for name, arr in (("times", times), ("offsets", offsets), ("interval_index", index), ("left", left)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "weight", (times - left) ** (1.0 - self.lam))

    @classmethod
    def build(cls, breakpoints: Sequence[float], lam: float, nodes_per_interval: int = 256,
              grading: float | None = None) -> "Discretization":
        r = _default_grading(lam) if grading is None else float(grading)
        meshes = tuple(
            IntervalMesh.graded(a, b, nodes_per_interval, r) for a, b in zip(breakpoints, breakpoints[1:])
        )
        return cls(meshes, float(lam))

    @classmethod
    def for_problem(cls, problem: ImpulsiveProblem, nodes_per_interval: int = 256,
                    grading: float | None = None) -> "Discretization":
        return cls.build(problem.breakpoints, problem.lam, nodes_per_interval, grading)

    @property
    def size(self) -> int:
        return self.times.size

    @property
    def breakpoints(self) -> tuple:
        return tuple(m.t_start for m in self.meshes) + (self.meshes[-1].t_end,)

    def last_node(self, k: int) -> int:
        """Index of the last node of interval k (the node at its right end)."""
        return int(self.offsets[k + 1] - 1)

    def interval_slice(self, k: int) -> slice:
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))


@dataclass(frozen=True, eq=False)
class WeightedTrajectory:
    """Weighted node values w_j = (t_j - t_k)^(1-lambda) x(t_j), shape (M, n)."""

    disc: Discretization
    weighted: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weighted, dtype=float)
        if w.ndim == 1:
            w = w[:, None]
        if w.shape[0] != self.disc.size:
            raise ValueError(f"{w.shape[0]} samples for {self.disc.size} nodes")
        if not np.all(np.isfinite(w)):
            raise ValueError("weighted samples must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weighted", w)

    @property
    def n(self) -> int:
        return self.weighted.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.disc.times

    def raw(self) -> np.ndarray:
        """Unweighted values x(t_j); large near each t_k when lambda < 1."""
        return self.weighted / self.disc.weight[:, None]

    @classmethod
    def from_raw(cls, disc: Discretization, raw) -> "WeightedTrajectory":
        raw = np.asarray(raw, dtype=float)
        if raw.ndim == 1:
            raw = raw[:, None]
        return cls(disc, raw * disc.weight[:, None])

    @classmethod
    def from_function(cls, disc: Discretization, fn, weighted: bool = False) -> "WeightedTrajectory":
        """Sample ``fn(t)`` (raw values, or weighted ones if ``weighted``) at every node."""
        vals = np.array([np.atleast_1d(np.asarray(fn(float(t)), dtype=float)) for t in disc.times])
        return cls(disc, vals) if weighted else cls.from_raw(disc, vals)

    @classmethod
    def constant(cls, disc: Discretization, value, weighted: bool = False) -> "WeightedTrajectory":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        vals = np.broadcast_to(value, (disc.size, value.size))
        return cls(disc, vals) if weighted else cls.from_raw(disc, vals)

    def distance(self, other: "WeightedTrajectory") -> float:
        """Weighted sup norm of the difference."""
        return float(np.abs(self.weighted - other.weighted).max())

    def norm(self) -> float:
        return float(np.abs(self.weighted).max())

    def interval(self, k: int):
        """(times, weighted values) on interval k."""
        sl = self.disc.interval_slice(k)
        return self.disc.times[sl], self.weighted[sl]


# --------------------------------------------------------------------------
# the discretized operator


class _CompiledG:
    """Affine pieces of G on one discretization, built once."""

    def __init__(self, problem: ImpulsiveProblem, disc: Discretization):
        missing = [imp.time for imp in problem.impulses if imp.time not in disc.breakpoints]
        if missing:
            raise ValueError(f"discretization lacks breakpoints at impulse times {missing}")
        if abs(disc.breakpoints[-1] - problem.T) > 0 or disc.breakpoints[0] != 0.0:
            raise ValueError("discretization must cover (0, T]")
        if disc.lam != problem.lam:
            raise ValueError("discretization built for a different lambda")
        fam = problem.family
        mu, lam, B = problem.ord.mu, problem.lam, problem.gen.B
        times = disc.times
        n, M = problem.n, disc.size
        self.C = problem.gen.C

        self.free = np.einsum("jab,b->ja", _ml_family(mu, lam, B, times, lam - 1.0, fam.ctl), problem.x0)

        bps = disc.breakpoints
        self.impulses = []
        for imp in problem.impulses:
            k = bps.index(imp.time)
            src = disc.last_node(k - 1)
            first = int(disc.offsets[k])
            S = _ml_family(mu, lam, B, times[first:] - imp.time, lam - 1.0, fam.ctl)
            self.impulses.append((imp.phi, src, first, S))

        kernel = OperatorKernel(fam)
        W = np.zeros((M, M, n, n))
        for q, mesh in enumerate(disc.meshes):
            start, stop = int(disc.offsets[q]), int(disc.offsets[q + 1])
            Wq, _ = convolution_matrix(kernel, mesh, times[start:], rho=lam - 1.0)
            W[start:, start:stop] = Wq
        if lam < 1.0:
            self._starting_weights(W, disc, fam, mu, lam, B)
        self.W = W
        self.problem_ref = weakref.ref(problem)
        self.disc = disc

    @staticmethod
    def _starting_weights(W, disc, fam, mu, lam, B):
        # Near t_q the integrand behaves like (s - t_q)^(lambda-1) v(s), which
        # piecewise-linear interpolation resolves poorly on the first few
        # dozen cells. Correct the weight of the first node of each interval
        # so that F(s) = (s - t_q)^(lambda-1) is integrated exactly over
        # (t_q, t]; the closed form is
        # Gamma(lambda) tau^(mu+lambda-1) E_{mu,mu+lambda}(-B tau^mu).
        rho = lam - 1.0
        times = disc.times
        for q, mesh in enumerate(disc.meshes):
            start = int(disc.offsets[q])
            tau = times[start:] - mesh.t_start
            exact = math.gamma(lam) * _ml_family(mu, mu + lam, B, tau, mu + lam - 1.0, fam.ctl)
            approx = np.einsum("jmab,m->jab", W[start:, start:], tau**rho)
            W[start:, start] += (exact - approx) / tau[0] ** rho

    def __call__(self, problem: ImpulsiveProblem, raw: np.ndarray) -> np.ndarray:
        F = problem.eval_g(self.disc.times, raw) + self.C * raw
        out = self.free + np.einsum("jmab,mb->ja", self.W, F)
        for phi, src, first, S in self.impulses:
            jump = np.broadcast_to(np.asarray(phi(raw[src].copy()), dtype=float), (problem.n,))
            out[first:] += S @ jump
        return out


_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()
_CACHE_LOCK = threading.Lock()


def _compiled(problem: ImpulsiveProblem, disc: Discretization) -> _CompiledG:
    with _CACHE_LOCK:
        per_problem = _CACHE.setdefault(problem, weakref.WeakKeyDictionary())
        comp = per_problem.get(disc)
        if comp is None:
            comp = _CompiledG(problem, disc)
            per_problem[disc] = comp
        return comp


def apply_G(problem: ImpulsiveProblem, x: WeightedTrajectory) -> WeightedTrajectory:
    """One application of the mild-solution operator at every mesh node.

    The impulse sum at a node in (t_k, t_{k+1}] contains exactly the k
    impulses at t_1..t_k, each evaluated at the left limit x(t_i), which is
    the last node of the preceding interval.
    """
    if x.n != problem.n:
        raise ValueError(f"trajectory has dimension {x.n}, problem has {problem.n}")
    comp = _compiled(problem, x.disc)
    return WeightedTrajectory.from_raw(x.disc, comp(problem, x.raw()))


def fixed_point(problem: ImpulsiveProblem, x: WeightedTrajectory, tol: float = 1e-12,
                max_iter: int = 500) -> tuple[WeightedTrajectory, int]:
    """Picard iteration x <- G x until successive iterates differ by < ``tol``.

    For Lipschitz g the Volterra structure makes this converge from any
    start. Returns the last iterate and the number of applications.

    Raises
    ------
    IterationConvergenceError
        After ``max_iter`` applications.
    """
    for p in range(1, max_iter + 1):
        nxt = apply_G(problem, x)
        step = nxt.distance(x)
        x = nxt
        if step < tol:
            return x, p
    raise IterationConvergenceError(f"Picard iteration did not reach {tol} in {max_iter} steps (last step {step:.3e})")


# --------------------------------------------------------------------------
# monotone iteration


@dataclass(frozen=True)
class EnclosureReport:
    """Diagnostics of :func:`iterate_extremal`.

    ``chain_violation`` is the largest amount by which
    y_{p-1} <= y_p <= z_p <= z_{p-1} failed at any node, component and
    step (0 when the chains are ordered). ``fixed_point_residual`` holds
    ||G x - x|| for the minimal and the maximal solution; norms are weighted
    sup norms.
    """

    iterations: int
    converged: bool
    chain_violation: float
    fixed_point_residual: tuple
    uniqueness_gap: float
    step_history: tuple = ()
    ordering_failures: int = 0

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "chain_violation": self.chain_violation,
            "fixed_point_residual": {"lower": self.fixed_point_residual[0], "upper": self.fixed_point_residual[1]},
            "uniqueness_gap": self.uniqueness_gap,
            "ordering_failures": self.ordering_failures,
        }


def iterate_extremal(
    problem: ImpulsiveProblem,
    y0: WeightedTrajectory,
    z0: WeightedTrajectory,
    tol: float = 1e-8,
    max_iter: int = 200,
    parallel: bool = False,
):
    """Monotone iteration y_p = G y_{p-1}, z_p = G z_{p-1}.

    Stops when both successive differences drop below ``tol``. Ordering is
    checked at every step with slack 10 * ``tol``; failures (which signal
    that the monotonicity conditions do not hold) are counted and reported
    with an :class:`OrderingWarning`, and the chains are still returned.

    Returns
    -------
    x_min, x_max : WeightedTrajectory
    report : EnclosureReport

    Raises
    ------
    ValueError
        If y0 exceeds z0 anywhere, or the seeds live on different meshes.
    IterationConvergenceError
        After ``max_iter`` steps; ``.report`` carries the last diagnostics.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if y0.disc is not z0.disc:
        raise ValueError("seeds must share a discretization")
    excess = float((y0.weighted - z0.weighted).max())
    if excess > 0:
        raise ValueError(f"lower seed exceeds upper seed by {excess:.3e}")
    slack = 10.0 * tol
    y, z = y0, z0
    worst = 0.0
    failures = 0
    history = []
    pool = ThreadPoolExecutor(2) if parallel else None
    try:
        converged = False
        p = 0
        for p in range(1, max_iter + 1):
            if pool is not None:
                fy, fz = pool.submit(apply_G, problem, y), pool.submit(apply_G, problem, z)
                y_new, z_new = fy.result(), fz.result()
            else:
                y_new, z_new = apply_G(problem, y), apply_G(problem, z)
            viol = max(
                float((y.weighted - y_new.weighted).max()),
                float((y_new.weighted - z_new.weighted).max()),
                float((z_new.weighted - z.weighted).max()),
                0.0,
            )
            worst = max(worst, viol)
            if viol > slack:
                failures += 1
            dy, dz = y_new.distance(y), z_new.distance(z)
            history.append((dy, dz))
            y, z = y_new, z_new
            if dy < tol and dz < tol:
                converged = True
                break
        res_lo = apply_G(problem, y).distance(y)
        res_hi = apply_G(problem, z).distance(z)
    finally:
        if pool is not None:
            pool.shutdown()
    report = EnclosureReport(p, converged, worst, (res_lo, res_hi), z.distance(y), tuple(history), failures)
    if failures:
        warnings.warn(
            f"monotone chains lost their order in {failures} step(s), worst {worst:.3e}; "
            "check the monotonicity conditions",
            OrderingWarning,
            stacklevel=2,
        )
    if not converged:
        raise IterationConvergenceError(f"monotone iteration did not converge in {max_iter} steps", report)
    return y, z, report


# --------------------------------------------------------------------------
# lower and upper solutions


@dataclass(frozen=True)
class SideReport:
    """Outcome of :func:`verify_lower_upper`.

    ``mild_margins`` holds, per interval, the worst weighted value of
    candidate - G(candidate) (upper) or G(candidate) - candidate (lower);
    the candidate passes when every margin is >= -slack. The remaining
    fields are diagnostics of the differential form: per interval, the
    fraction of interior nodes with the right sign of
    D^{mu,nu} c + A c - g(t, c) and its worst signed value; per impulse the
    margin of the jump inequality; and the margin of the weighted initial
    inequality.
    """

    side: str
    passes: bool
    mild_margins: tuple
    differential_fraction: tuple = ()
    differential_worst: tuple = ()
    impulse_margins: tuple = ()
    initial_margin: float | None = None

    @property
    def worst_margin(self) -> float:
        return min(self.mild_margins)


def verify_lower_upper(
    problem: ImpulsiveProblem,
    candidate: WeightedTrajectory,
    side: str,
    slack: float = 1e-7,
    diagnostics: bool = True,
) -> SideReport:
    """Check whether ``candidate`` is a lower or an upper solution.

    The decisive test is the mild form: an upper solution satisfies
    G(c) <= c at every node, a lower one G(c) >= c. With ``diagnostics`` the
    differential inequality is evaluated through the numerical Hilfer
    derivative on each interval (taking t_k as the base point and skipping
    the first two nodes), together with the jump and initial inequalities.
    Jumps are measured as Gamma(lambda) times the weighted value just after
    t_k, minus x(t_k) when lambda = 1, which is the jump of I^{1-lambda} x.
    """
    if side not in ("lower", "upper"):
        raise ValueError("side must be 'lower' or 'upper'")
    sign = 1.0 if side == "upper" else -1.0
    disc = candidate.disc
    Gc = apply_G(problem, candidate)
    diff = sign * (candidate.weighted - Gc.weighted)
    mild = tuple(float(diff[disc.interval_slice(k)].min()) for k in range(len(disc.meshes)))
    passes = min(mild) >= -slack
    if not diagnostics:
        return SideReport(side, passes, mild)

    lam = problem.lam
    raw = candidate.raw()
    fractions, worsts = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for k, mesh in enumerate(disc.meshes):
            sl = disc.interval_slice(k)
            if mesh.size < 4:
                fractions.append(float("nan"))
                worsts.append(float("nan"))
                continue
            f = SampledFunction(mesh, raw[sl], None, lam - 1.0)
            ts = mesh.nodes[2:]
            d = hilfer_derivative(problem.ord, f, ts)
            d = d.reshape(ts.size, problem.n)
            xs = raw[sl][2:]
            resid = sign * (d + xs @ problem.gen.A.T - problem.eval_g(ts, xs))
            fractions.append(float(np.mean(np.all(resid >= 0, axis=1))))
            worsts.append(float(resid.min()))
    g_lam = math.gamma(lam)
    imp_margins = []
    for imp in problem.impulses:
        k = disc.breakpoints.index(imp.time)
        before = raw[disc.last_node(k - 1)]
        after = g_lam * candidate.weighted[int(disc.offsets[k])]
        jump = after - before if lam == 1.0 else after
        phi = np.asarray(imp.phi(before.copy()), dtype=float)
        imp_margins.append(float((sign * (jump - phi)).min()))
    init = float((sign * (g_lam * candidate.weighted[0] - problem.x0)).min())
    return SideReport(side, passes, mild, tuple(fractions), tuple(worsts), tuple(imp_margins), init)


# --------------------------------------------------------------------------
# conditions


@dataclass(frozen=True)
class ConditionReport:
    """Worst sampled margins of the structural conditions.

    ``A1_margin``: min of g(t,x2) - g(t,x1) + C (x2 - x1).
    ``A2_violations``: impulse samples with phi_k(x1) > phi_k(x2) somewhere,
    as (impulse index, worst margin) pairs.
    ``A4_margin``: min of C* (x2 - x1) - (g(t,x2) - g(t,x1)); ``None``
    without C*.
    ``L``: D C* + D C + C with D = 1.
    """

    A1_margin: float
    A2_violations: tuple
    A4_margin: float | None
    L: float | None
    C: float
    C_star: float | None
    samples: int
    seed: int

    def ok(self, slack: float = 0.0) -> bool:
        a4 = self.A4_margin is None or self.A4_margin >= -slack
        return self.A1_margin >= -slack and not self.A2_violations and a4

    def as_dict(self) -> dict:
        return {
            "A1_margin": self.A1_margin,
            "A2_violations": [list(v) for v in self.A2_violations],
            "A4_margin": self.A4_margin,
            "L": self.L,
            "C": self.C,
            "C_star": self.C_star,
            "samples": self.samples,
            "seed": self.seed,
            "ok": self.ok(),
        }


def _ordered_pairs(rng, lo, hi):
    u1 = rng.random(lo.shape)
    u2 = rng.random(lo.shape)
    x1 = lo + u1 * (hi - lo)
    x2 = x1 + u2 * (hi - x1)
    return x1, x2


def check_conditions(
    problem: ImpulsiveProblem,
    y0: WeightedTrajectory,
    z0: WeightedTrajectory,
    C_candidate: float | None = None,
    C_star: float | None = None,
    samples: int = 256,
    seed: int = 0,
) -> ConditionReport:
    """Sample ordered pairs x1 <= x2 inside [y0(t), z0(t)] and report margins.

    Sample times are drawn from the mesh nodes; the corner pair
    (y0(t), z0(t)) is included at every sampled node. For each impulse the
    pairs are drawn from the order interval at the impulse time. The
    generator is seeded with ``seed``, so reports are reproducible.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if y0.disc is not z0.disc:
        raise ValueError("bounds must share a discretization")
    if float((y0.weighted - z0.weighted).max()) > 0:
        raise ValueError("lower bound exceeds upper bound")
    C = problem.gen.C if C_candidate is None else float(C_candidate)
    rng = np.random.default_rng(seed)
    disc = y0.disc
    lo_all, hi_all = y0.raw(), z0.raw()

    idx = rng.integers(0, disc.size, size=samples)
    t = disc.times[idx]
    lo, hi = lo_all[idx], hi_all[idx]
    x1, x2 = _ordered_pairs(rng, lo, hi)
    x1 = np.vstack([x1, lo])
    x2 = np.vstack([x2, hi])
    t = np.concatenate([t, t])
    dg = problem.eval_g(t, x2) - problem.eval_g(t, x1)
    d = x2 - x1
    a1 = float((dg + C * d).min())
    a4 = None if C_star is None else float((C_star * d - dg).min())

    violations = []
    for i, imp in enumerate(problem.impulses):
        k = disc.breakpoints.index(imp.time)
        j = disc.last_node(k - 1)
        lo_k = np.broadcast_to(lo_all[j], (samples, problem.n))
        hi_k = np.broadcast_to(hi_all[j], (samples, problem.n))
        p1, p2 = _ordered_pairs(rng, lo_k, hi_k)
        p1 = np.vstack([p1, lo_all[j]])
        p2 = np.vstack([p2, hi_all[j]])
        margin = min(
            float((np.asarray(imp.phi(b.copy()), dtype=float) - np.asarray(imp.phi(a.copy()), dtype=float)).min())
            for a, b in zip(p1, p2)
        )
        if margin < 0:
            violations.append((i, margin))
    L = None if C_star is None else C_star + C + C
    return ConditionReport(a1, tuple(violations), a4, L, C, C_star, samples, seed)


# --------------------------------------------------------------------------
# uniqueness


@dataclass(frozen=True)
class UniquenessCertificate:
    """Outcome of :func:`uniqueness_certificate`.

    ``gap`` is ||x_max - x_min|| (weighted sup norm). ``b`` and
    ``amplification`` = E_mu(b Gamma(mu) T^mu) come from the Gronwall
    bound; ``threshold`` = tol * amplification. ``defect_max`` is the
    largest forcing fed to the Gronwall bound and ``ceiling_max`` the
    largest resulting bound on the raw gap; ``gronwall_consistent`` says
    whether the observed raw gap stays under it.
    """

    gap: float
    b: float
    bound_constant: float
    amplification: float | None
    threshold: float | None
    defect_max: float
    ceiling_max: float | None
    gronwall_consistent: bool | None
    conditions_ok: bool
    unique: bool
    reason: str

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def uniqueness_certificate(
    problem: ImpulsiveProblem,
    x_min: WeightedTrajectory,
    x_max: WeightedTrajectory,
    C_star: float,
    tol: float = 1e-8,
    samples: int = 256,
    seed: int = 0,
) -> UniquenessCertificate:
    """Gronwall-based check that the extremal solutions coincide.

    With the one-sided monotonicity and Lipschitz-type conditions in force on [x_min, x_max], u = ||x_max - x_min||_inf
    satisfies u <= a + b int_0^t (t-s)^(mu-1) u ds, where
    b = M* (C* + C) / Gamma(mu) and the forcing a collects the fixed-point
    residuals of both solutions and the propagated impulse differences.
    Uniqueness within tolerance is declared when the conditions hold and
    the gap is at most tol * E_mu(b Gamma(mu) T^mu).
    """
    if x_min.disc is not x_max.disc:
        raise ValueError("solutions must share a discretization")
    if float((x_min.weighted - x_max.weighted).max()) > 10 * tol:
        raise ValueError("x_min exceeds x_max")
    disc = x_min.disc
    mu = problem.ord.mu
    C = problem.gen.C
    fam = problem.family
    M = fam.bound_constant
    gap = x_max.distance(x_min)
    b = M * (C_star + C) / math.gamma(mu)

    lo = WeightedTrajectory(disc, np.minimum(x_min.weighted, x_max.weighted))
    hi = WeightedTrajectory(disc, np.maximum(x_min.weighted, x_max.weighted))
    cond = check_conditions(problem, lo, hi, C, C_star, samples, seed)
    slack = 10 * tol
    conditions_ok = cond.A1_margin >= -slack and (cond.A4_margin or 0.0) >= -slack

    comp = _compiled(problem, disc)
    raw_lo, raw_hi = x_min.raw(), x_max.raw()
    r_lo = np.abs(apply_G(problem, x_min).raw() - raw_lo).max(axis=1)
    r_hi = np.abs(apply_G(problem, x_max).raw() - raw_hi).max(axis=1)
    defect = r_lo + r_hi
    for phi, src, first, S in comp.impulses:
        dphi = np.asarray(phi(raw_hi[src].copy()), dtype=float) - np.asarray(phi(raw_lo[src].copy()), dtype=float)
        defect[first:] += np.abs(np.einsum("jab,b->ja", S, dphi)).max(axis=1)

    T = disc.breakpoints[-1]
    try:
        amp = float(ml_array(mu, 1.0, np.asarray(b * math.gamma(mu) * T**mu)))
    except ValueError:
        amp = None
    ceiling_max = None
    consistent = None
    if amp is not None and b >= 0:
        mesh = IntervalMesh(0.0, T, disc.times)
        ceiling = ml_kernel_bound(GronwallData(SampledFunction(mesh, defect), b, mu), disc.times)
        ceiling_max = float(ceiling.max())
        u = np.abs(raw_hi - raw_lo).max(axis=1)
        consistent = bool(np.all(u <= ceiling + slack * (1 + ceiling)))

    if not conditions_ok:
        unique, reason = False, "monotonicity or Lipschitz condition fails on the enclosure"
    elif amp is None:
        unique, reason = False, "Gronwall amplification outside the reliable Mittag-Leffler range"
    elif gap <= tol * amp:
        unique, reason = True, "gap within tolerance times Gronwall amplification"
    else:
        unique, reason = False, "gap exceeds tolerance times Gronwall amplification"
    threshold = None if amp is None else tol * amp
    return UniquenessCertificate(
        gap, b, M, amp, threshold, float(defect.max()), ceiling_max, consistent, conditions_ok, unique, reason
    )
