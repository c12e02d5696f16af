"""Product integration on graded meshes."""

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from hilfer_extremal.exceptions import IllConditionedWarning, QuadratureAccuracyWarning
from hilfer_extremal.fracquad import (
    IntervalMesh,
    PowerKernel,
    SampledFunction,
    cell_weights,
    convolution_matrix,
    hilfer_derivative,
    rl_integral,
    singular_convolution,
)
from hilfer_extremal.specialfn import FractionalOrder


def power_rl(p, g, t, t0=0.0):
    """Exact I^g of (s - t0)^p."""
    return math.gamma(p + 1) / math.gamma(p + 1 + g) * (t - t0) ** (p + g)


def sampled(fn, n=128, grading=1.0, t0=0.0, t1=1.0, **kw):
    mesh = IntervalMesh.graded(t0, t1, n, grading)
    return SampledFunction(mesh, fn(mesh.nodes), **kw)


class TestMesh:
    def test_graded_nodes(self):
        m = IntervalMesh.graded(0.0, 2.0, 4, 2.0)
        np.testing.assert_allclose(m.nodes, 2.0 * (np.arange(1, 5) / 4) ** 2)
        np.testing.assert_allclose(m.left, [0.0, *m.nodes[:-1]])

    def test_coarsen_is_graded_half(self):
        m = IntervalMesh.graded(0.3, 1.0, 64, 3.0)
        np.testing.assert_allclose(m.coarsen().nodes, IntervalMesh.graded(0.3, 1.0, 32, 3.0).nodes)

    @pytest.mark.parametrize(
        "nodes", [[0.5, 0.4, 1.0], [0.0, 0.5, 1.0], [0.5, 0.9]]
    )
    def test_invalid_nodes(self, nodes):
        with pytest.raises(ValueError):
            IntervalMesh(0.0, 1.0, np.array(nodes))

    def test_invalid_grading(self):
        with pytest.raises(ValueError):
            IntervalMesh.graded(0.0, 1.0, 8, 0.5)


def test_sampled_function_interpolant():
    f = sampled(lambda s: 2 * s + 1, 8, start=1.0)
    assert f(0.01) == pytest.approx(1.02)
    assert f(0.77) == pytest.approx(2.54)
    g = sampled(lambda s: s**-0.5, 8, start_exponent=-0.5)
    assert g(0.0625 / 4) == pytest.approx((0.0625 / 4) ** -0.5)
    with pytest.raises(ValueError):
        f(1.5)
    with pytest.raises(ValueError):
        SampledFunction(f.mesh, np.ones(3))


@pytest.mark.parametrize("g", [0.3, 0.5, 1.0, 1.7])
def test_rl_of_linear_is_exact(g):
    f = sampled(lambda s: 3 * s + 2, 16, 1.5, start=2.0)
    t = f.mesh.nodes[3:]
    exact = 3 * power_rl(1, g, t) + 2 * power_rl(0, g, t)
    np.testing.assert_allclose(rl_integral(g, f, t), exact, rtol=1e-12)


def test_rl_reference_value():
    # I^{1/2} s at 1 = Gamma(2)/Gamma(2.5)
    f = sampled(lambda s: s, 32, start=0.0)
    assert rl_integral(0.5, f, 1.0) == pytest.approx(0.7522527780636751, rel=1e-13)


def test_rl_at_interior_time_between_nodes():
    f = sampled(lambda s: s, 10, start=0.0)
    t = 0.437
    assert rl_integral(0.4, f, t) == pytest.approx(power_rl(1, 0.4, t), rel=1e-12)


def test_rl_smooth_converges_second_order():
    errs = []
    for n in (32, 64, 128):
        f = sampled(np.exp, n, start=1.0)
        ref = integrate.quad(lambda s: math.exp(s), 0, 1, weight="alg", wvar=(0, -0.6))[0] / math.gamma(0.4)
        errs.append(abs(rl_integral(0.4, f, 1.0) - ref))
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0


def test_singular_start_profile_with_grading():
    # s^(-0.3): the start profile integrates the singular first cell exactly
    p = -0.3
    errs = []
    for n in (64, 128):
        f = sampled(lambda s: s**p * (1 + s), n, 2.0, start_exponent=p)
        exact = power_rl(p, 0.6, 1.0) + power_rl(p + 1, 0.6, 1.0)
        errs.append(abs(rl_integral(0.6, f, 1.0) - exact) / exact)
    assert errs[1] < 3e-4
    assert errs[0] / errs[1] > 2.0


def test_shifted_interval():
    f = sampled(lambda s: (s - 0.5) ** 2, 64, 1.0, t0=0.5, t1=1.5, start=0.0)
    assert rl_integral(0.7, f, 1.5) == pytest.approx(power_rl(2, 0.7, 1.5, 0.5), rel=2e-4)  # O(h^2) interpolation error


def test_vector_valued_samples():
    mesh = IntervalMesh.graded(0.0, 1.0, 16)
    f = SampledFunction(mesh, np.stack([np.ones(16), mesh.nodes], axis=1), start=np.array([1.0, 0.0]))
    out = rl_integral(0.5, f, np.array([0.5, 1.0]))
    assert out.shape == (2, 2)
    np.testing.assert_allclose(out[:, 0], power_rl(0, 0.5, np.array([0.5, 1.0])), rtol=1e-12)
    np.testing.assert_allclose(out[:, 1], power_rl(1, 0.5, np.array([0.5, 1.0])), rtol=1e-12)


def test_rl_time_range_checked():
    f = sampled(np.cos, 8)
    with pytest.raises(ValueError):
        rl_integral(0.5, f, 1.2)
    with pytest.raises(ValueError):
        rl_integral(0.5, f, 0.01)


def test_cell_weights_against_quad():
    k = PowerKernel(0.35)
    t, a, b = 0.9, 0.2, 0.3
    wa, wb = cell_weights(k, np.array([t]), np.array([a]), np.array([b]))
    ref_a = integrate.quad(lambda s: k.k0(t - s) * (b - s) / (b - a), a, b)[0]
    ref_b = integrate.quad(lambda s: k.k0(t - s) * (s - a) / (b - a), a, b)[0]
    assert wa[0] == pytest.approx(ref_a, rel=1e-12) and wb[0] == pytest.approx(ref_b, rel=1e-12)


def test_convolution_matrix_row_sums():
    mesh = IntervalMesh.graded(0.0, 1.0, 40, 2.0)
    W, Ws = convolution_matrix(PowerKernel(0.5), mesh, mesh.nodes, with_start=True)
    assert W.shape == (40, 40) and Ws.shape == (40,)
    np.testing.assert_allclose(W.sum(axis=1) + Ws, power_rl(0, 0.5, mesh.nodes), rtol=1e-12)
    # causality: node i only sees nodes <= i
    assert np.all(np.triu(W, 1) == 0)


def test_singular_convolution_constant():
    f = sampled(np.ones_like, 16, start=1.0)
    assert singular_convolution(0.5, f, 1.0) == pytest.approx(2.0, rel=1e-13)


def test_singular_convolution_budget_warning():
    f = sampled(lambda s: np.sin(40 * s), 16, start=0.0)
    with pytest.warns(QuadratureAccuracyWarning):
        singular_convolution(0.5, f, 1.0, budget=1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        g = sampled(lambda s: s, 16, start=0.0)
        singular_convolution(0.5, g, 1.0, budget=1e-10)


def test_hilfer_derivative_caputo_and_rl():
    f = sampled(lambda s: s, 400, 1.0, start=0.0)
    caputo = hilfer_derivative(FractionalOrder(0.5, 1.0), f, 0.8)
    assert caputo == pytest.approx(0.8**0.5 / math.gamma(1.5), rel=1e-3)
    one = sampled(np.ones_like, 400, 1.0, start=1.0)
    rl = hilfer_derivative(FractionalOrder(0.5, 0.0), one, np.array([0.5, 0.8]))
    np.testing.assert_allclose(rl, np.array([0.5, 0.8]) ** -0.5 / math.gamma(0.5), rtol=1e-3)


def test_hilfer_derivative_warns_near_start():
    f = sampled(lambda s: s, 50, start=0.0)
    with pytest.warns(IllConditionedWarning):
        hilfer_derivative(FractionalOrder(0.5, 1.0), f, f.mesh.nodes[1])


@settings(max_examples=40, deadline=None)
@given(
    a=st.floats(-5, 5), b=st.floats(-5, 5), g=st.floats(0.1, 1.5),
    w1=st.integers(0, 6), w2=st.integers(0, 6),
)
def test_rl_integral_is_linear(a, b, g, w1, w2):
    mesh = IntervalMesh.graded(0.0, 1.0, 24, 1.5)
    f1 = np.cos((w1 + 1) * mesh.nodes)
    f2 = mesh.nodes ** (w2 / 3)
    t = mesh.nodes[::5]
    lhs = rl_integral(g, SampledFunction(mesh, a * f1 + b * f2), t)
    rhs = a * rl_integral(g, SampledFunction(mesh, f1), t) + b * rl_integral(g, SampledFunction(mesh, f2), t)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + abs(a) + abs(b)))


# --------------------------------------------------------------------------
# documented examples and invariants


def test_plain_integral_of_one():
    assert rl_integral(1.0, sampled(np.ones_like, 8, start=1.0), 1.0) == pytest.approx(1.0, rel=1e-14)


def test_half_integral_of_one():
    f = sampled(np.ones_like, 32, start=1.0)
    t = f.mesh.nodes
    np.testing.assert_allclose(rl_integral(0.5, f, t), t**0.5 / math.gamma(1.5), rtol=1e-13)


@pytest.mark.parametrize("mu,k", [(0.3, 2.0), (0.8, -1.5)])
def test_singular_convolution_of_constant(mu, k):
    f = sampled(lambda s: np.full_like(s, k), 16, start=k)
    t = f.mesh.nodes[5:]
    np.testing.assert_allclose(singular_convolution(mu, f, t), k * t**mu / mu, rtol=1e-13)


def test_singular_convolution_beta_oracle():
    ref = integrate.quad(lambda s: s**-0.3, 0, 1, weight="alg", wvar=(0, -0.4))[0]
    f = sampled(lambda s: s**-0.3, 256, 2.0, start_exponent=-0.3)
    assert singular_convolution(0.6, f, 1.0) == pytest.approx(ref, rel=1e-4)


@pytest.mark.parametrize("p", [0.0, 1.0, 2.0, 0.5])
def test_singular_convolution_refinement(p):
    exact = math.gamma(p + 1) * math.gamma(0.5) / math.gamma(p + 1.5)
    errs = []
    for n in (16, 32, 64):
        f = sampled(lambda s: np.sin(s) + s**p, n, 1.0, start=0.0 if p > 0 else 1.0)
        ref = exact + integrate.quad(np.sin, 0, 1, weight="alg", wvar=(0, -0.5))[0]
        errs.append(abs(singular_convolution(0.5, f, 1.0) - ref))
    assert all(e < 1e-12 or e0 / e >= 2.0 for e0, e in zip(errs, errs[1:]))


def test_rl_semigroup_on_polynomial():
    mesh = IntervalMesh.graded(0.0, 1.0, 256, 1.5)
    f = SampledFunction(mesh, 1 + mesh.nodes + mesh.nodes**2, start=1.0)
    inner = SampledFunction(mesh, rl_integral(0.3, f, mesh.nodes), start=0.0)
    composed = rl_integral(0.5, inner, 1.0)
    assert composed == pytest.approx(rl_integral(0.8, f, 1.0), rel=1e-4)


def test_hilfer_derivative_of_zero():
    f = sampled(np.zeros_like, 64, start=0.0)
    for nu in (0.0, 0.4, 1.0):
        assert hilfer_derivative(FractionalOrder(0.5, nu), f, 0.7) == 0.0


def test_hilfer_derivative_reference_values():
    f = sampled(lambda s: s, 400, 1.0, start=0.0)
    assert hilfer_derivative(FractionalOrder(0.5, 1.0), f, 1.0) == pytest.approx(1.1283791670955126, rel=2e-3)
    one = sampled(np.ones_like, 400, 1.0, start=1.0)
    assert hilfer_derivative(FractionalOrder(0.5, 0.0), one, 1.0) == pytest.approx(0.5641895835477563, rel=2e-3)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), mu=st.floats(0.1, 1.0))
def test_singular_convolution_is_linear(a, b, mu):
    mesh = IntervalMesh.graded(0.0, 1.0, 24, 2.0)
    f1, f2 = np.cos(mesh.nodes), mesh.nodes**2
    lhs = singular_convolution(mu, SampledFunction(mesh, a * f1 + b * f2), mesh.nodes)
    rhs = a * singular_convolution(mu, SampledFunction(mesh, f1), mesh.nodes) + b * singular_convolution(
        mu, SampledFunction(mesh, f2), mesh.nodes
    )
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + abs(a) + abs(b)))
