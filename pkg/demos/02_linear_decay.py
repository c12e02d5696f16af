"""Caputo, Riemann-Liouville and intermediate Hilfer decay.

For the scalar problem D^{mu,nu} x + a x = 0 the mild solution is
x(t) = S(t) x0 with S(t) = t^(lam-1) E_{mu,lam}(-a t^mu), lam = mu + nu - mu nu.
The type parameter nu moves the initial behaviour from the singular
Riemann-Liouville profile (nu = 0) to the bounded Caputo one (nu = 1).

The script computes the mild solution by Picard iteration of the solution
map on a graded mesh and compares it with the closed form.

Run: python demos/02_linear_decay.py
"""

import math

import numpy as np

from hilfer_extremal import (
    Discretization,
    FractionalOrder,
    Generator,
    ImpulsiveProblem,
    WeightedTrajectory,
    fixed_point,
    ml_array,
)


def main():
    mu, a, x0 = 0.7, 2.0, 1.0
    for nu in (0.0, 0.5, 1.0):
        order = FractionalOrder(mu, nu)
        lam = order.lam
        # C = 1 moves part of the damping into the nonlinear slot; the mild solution does not depend on C
        problem = ImpulsiveProblem(order, Generator([[a]], 1.0), lambda t, x: 0.0 * x, (), np.array([x0]), 1.0,
                                   vectorized=True)
        disc = Discretization.for_problem(problem, 256)
        x, _ = fixed_point(problem, WeightedTrajectory.constant(disc, 0.0), tol=1e-12)
        t = disc.times
        exact = t ** (lam - 1) * ml_array(mu, lam, -a * t**mu) * x0
        weighted_err = np.abs(t ** (1 - lam) * (x.raw()[:, 0] - exact)).max()
        print(f"nu={nu:.1f} lam={lam:.2f}: x(1) = {x.raw()[-1, 0]:.10f} (exact {exact[-1]:.10f}), "
              f"weighted max error {weighted_err:.2e}, t^(1-lam) x -> {x.weighted[0, 0]:.4f} "
              f"(1/Gamma(lam) = {1 / math.gamma(lam):.4f})")


if __name__ == "__main__":
    main()
