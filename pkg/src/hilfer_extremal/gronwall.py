"""Fractional Gronwall inequality with a weakly singular kernel.

If x >= 0 satisfies

    x(t) <= a(t) + b int_0^t (t - s)^(beta - 1) x(s) ds

with a >= 0 locally integrable, b >= 0 and beta > 0, then

    x(t) <= a(t) + sum_{n>=1} (b Gamma(beta))^n I^{n beta} a(t),

where I^gamma is the Riemann-Liouville integral. For constant a = a0 the
right-hand side is a0 E_beta(b Gamma(beta) t^beta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import SeriesConvergenceError
from .fracquad import IntervalMesh, PowerKernel, SampledFunction, convolution_matrix
from .specialfn import DEFAULT_CONTROL, SeriesControl

__all__ = ["GronwallData", "GronwallReport", "ml_kernel_bound", "verify_inequality"]


@dataclass(frozen=True, eq=False)
class GronwallData:
    """Forcing ``a`` (samples on its mesh), constant ``b`` and exponent ``beta``."""

    a: SampledFunction
    b: float
    beta: float
    ctl: SeriesControl = DEFAULT_CONTROL

    def __post_init__(self):
        if not self.b >= 0:
            raise ValueError(f"b must be >= 0, got {self.b}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.a.values.ndim != 1:
            raise ValueError("forcing must be scalar-valued")
        if np.any(self.a.values < 0) or (self.a.start is not None and self.a.start < 0):
            raise ValueError("forcing must be nonnegative")

    @property
    def mesh(self) -> IntervalMesh:
        return self.a.mesh


def _rl_weights(order, f: SampledFunction, times):
    W, Ws = convolution_matrix(PowerKernel(order), f.mesh, times, f.start_exponent, f.start is not None)
    return W, Ws


def ml_kernel_bound(data: GronwallData, t):
    """The Gronwall bound at ``t`` (scalar or array within the mesh span).

    Terms are added until the n-th contribution falls below
    ``rel_tol`` times the running bound at every requested time.

    Raises
    ------
    SeriesConvergenceError
        If ``max_terms`` terms do not suffice (b Gamma(beta) T^beta too
        large for the cap).
    """
    f = data.a
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    times = np.atleast_1d(t_arr)
    mesh = f.mesh
    if np.any(times < mesh.nodes[0]) or np.any(times > mesh.t_end):
        raise ValueError(f"t must lie in [{mesh.nodes[0]}, {mesh.t_end}]")
    total = np.array([f(s) for s in times], dtype=float)
    if data.b == 0 or not np.any(f.values) and not (f.start is not None and f.start):
        return float(total[0]) if scalar else total
    c = data.b * math.gamma(data.beta)
    quiet = 0
    for n in range(1, data.ctl.max_terms):
        order = n * data.beta
        if order > 171:
            # the remaining terms are below double precision relative to the sum
            break
        W, Ws = _rl_weights(order, f, times)
        term = c**n * (W @ f.values + (Ws * f.start if f.start is not None else 0.0))
        total = total + term
        small = np.all(np.abs(term) <= data.ctl.rel_tol * np.abs(total))
        quiet = quiet + 1 if small else 0
        if quiet >= 2:
            break
    else:
        raise SeriesConvergenceError(f"Gronwall series exceeded {data.ctl.max_terms} terms")
    return float(total[0]) if scalar else total


@dataclass(frozen=True)
class GronwallReport:
    """Outcome of :func:`verify_inequality`.

    ``hypothesis_margin`` is the worst value of a + b K x - x over the mesh
    nodes; ``bound_margin`` the worst value of bound - x over the nodes
    before the first hypothesis failure (``None`` when the hypothesis
    already fails at the first node).
    """

    hypothesis_margin: float
    hypothesis_holds: bool
    first_failure: float | None
    bound_margin: float | None
    bound_holds: bool | None
    bound_kind: str


def verify_inequality(x: SampledFunction, data: GronwallData, tol: float = 1e-10, bound: str = "discrete") -> GronwallReport:
    """Check the Gronwall hypothesis for ``x`` at each node, then the bound.

    ``x`` and ``data.a`` must live on the same mesh. The bound is only
    asserted on the prefix of nodes where the hypothesis holds (within
    ``tol``), since the lemma needs it on all earlier times.

    ``bound="discrete"`` compares against the bound of the discretized
    inequality, (I - b Gamma(beta) K)^{-1} (a + start term) with K the
    product-integration matrix used for the hypothesis. K is lower triangular and nonnegative,
    so this bound is rigorous for the discrete hypothesis and carries no
    quadrature error relative to it. ``bound="series"`` uses
    :func:`ml_kernel_bound`, which approximates the continuous bound; a
    trajectory meeting the hypothesis with equality can then exceed it by
    the quadrature error, which ``tol`` must absorb.
    """
    if bound not in ("discrete", "series"):
        raise ValueError("bound must be 'discrete' or 'series'")
    if x.mesh is not data.mesh and not (
        x.mesh.t_start == data.mesh.t_start and np.array_equal(x.mesh.nodes, data.mesh.nodes)
    ):
        raise ValueError("x and the forcing must share a mesh")
    nodes = x.mesh.nodes
    a_vals = data.a.values
    W, Ws = _rl_weights(data.beta, x, nodes)
    c = data.b * math.gamma(data.beta)
    conv = W @ x.values + (Ws * x.start if x.start is not None else 0.0)
    margins = a_vals + c * conv - x.values
    ok = margins >= -tol
    hyp_holds = bool(ok.all())
    prefix = nodes.size if hyp_holds else int(np.argmin(ok))
    first_failure = None if hyp_holds else float(nodes[prefix])
    if prefix == 0:
        return GronwallReport(float(margins.min()), False, first_failure, None, None, bound)
    if bound == "discrete":
        # same weights as the hypothesis, so x <= ceiling follows by forward
        # substitution (1 - c W_ii > 0 and the off-diagonal weights are >= 0)
        lhs = np.eye(prefix) - c * W[:prefix, :prefix]
        if np.any(np.diag(lhs) <= 0):
            raise ValueError("mesh too coarse for the discrete Gronwall bound: 1 - b Gamma(beta) W_ii <= 0")
        rhs = a_vals[:prefix] + (c * Ws[:prefix] * x.start if x.start is not None else 0.0)
        ceiling = solve_triangular(lhs, rhs, lower=True)
    else:
        ceiling = ml_kernel_bound(data, nodes[:prefix])
    bmargin = float((ceiling - x.values[:prefix]).min())
    return GronwallReport(float(margins.min()), hyp_holds, first_failure, bmargin, bmargin >= -tol, bound)
