"""Mittag-Leffler functions and the one-sided stable density.

The solution operators of a fractional evolution equation are built from
E_{mu,beta}(-z) and from the density xi_mu on (0, inf). This script

1. tabulates E_{mu,1}(-z) and E_{mu,mu}(-z) for a few orders, showing the
   interpolation between the stretched-exponential (mu -> 1) and the slow
   algebraic decay (mu small);
2. checks the Laplace-transform identities
   E_{mu,1}(-z) = int xi_mu(theta) exp(-z theta) dtheta and
   E_{mu,mu}(-z) = int mu theta xi_mu(theta) exp(-z theta) dtheta
   by direct quadrature of the density.

Run: python demos/01_mittag_leffler.py
"""

import math

import numpy as np
from scipy.integrate import quad

from hilfer_extremal import mittag_leffler, xi_density


def laplace(mu, z, weight):
    f = lambda th: weight(th) * xi_density(mu, th) * math.exp(-z * th)  # noqa: E731
    return quad(f, 0.0, 1.0, limit=200)[0] + quad(f, 1.0, np.inf, limit=200)[0]


def main():
    zs = [0.0, 0.5, 2.0, 8.0]
    print("E_{mu,1}(-z)")
    print("   mu " + "".join(f"{z:>14g}" for z in zs))
    for mu in (0.3, 0.6, 0.9, 1.0):
        print(f"{mu:5.2f} " + "".join(f"{mittag_leffler(mu, 1.0, -z):14.8f}" for z in zs))
    print(f"exp(-z) " + "".join(f"{math.exp(-z):14.8f}" for z in zs)[2:])

    print("\nLaplace identities for xi_mu (series value vs quadrature of the density)")
    for mu in (0.4, 0.7):
        for z in (0.5, 3.0):
            e1 = mittag_leffler(mu, 1.0, -z)
            emu = mittag_leffler(mu, mu, -z)
            q1 = laplace(mu, z, lambda th: 1.0)
            qmu = laplace(mu, z, lambda th: mu * th)
            print(f"mu={mu} z={z}: E_mu,1 {e1:.12f} vs {q1:.12f} | E_mu,mu {emu:.12f} vs {qmu:.12f}")


if __name__ == "__main__":
    main()
