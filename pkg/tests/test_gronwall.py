"""Fractional Gronwall bound."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hilfer_extremal.exceptions import SeriesConvergenceError
from hilfer_extremal.fracquad import IntervalMesh, PowerKernel, SampledFunction, convolution_matrix
from hilfer_extremal.gronwall import GronwallData, ml_kernel_bound, verify_inequality
from hilfer_extremal.specialfn import SeriesControl, ml_array


def constant_forcing(a0, n=64, T=1.0, grading=1.0):
    mesh = IntervalMesh.graded(0.0, T, n, grading)
    return SampledFunction(mesh, np.full(n, a0), start=a0)


def picard_solution(data, iters=200):
    """Discrete solution of x = a + b int (t-s)^(beta-1) x(s) ds on the mesh of a."""
    mesh = data.mesh
    W, Ws = convolution_matrix(PowerKernel(data.beta), mesh, mesh.nodes, with_start=True)
    c = data.b * math.gamma(data.beta)
    x = data.a.values.copy()
    for _ in range(iters):
        x = data.a.values + c * (W @ x + Ws * data.a.start)
    return SampledFunction(mesh, x, start=data.a.start)


@pytest.mark.parametrize("b,beta", [(1.0, 1.0), (0.5, 0.6), (2.0, 0.8)])
def test_constant_forcing_matches_mittag_leffler(b, beta):
    data = GronwallData(constant_forcing(1.5), b, beta)
    t = data.mesh.nodes
    exact = 1.5 * ml_array(beta, 1.0, b * math.gamma(beta) * t**beta)
    np.testing.assert_allclose(ml_kernel_bound(data, t), exact, rtol=1e-9)


def test_beta_one_is_exponential():
    data = GronwallData(constant_forcing(2.0), 0.7, 1.0)
    assert ml_kernel_bound(data, 1.0) == pytest.approx(2.0 * math.exp(0.7), rel=1e-10)


def test_zero_b_returns_forcing():
    a = constant_forcing(3.0)
    assert ml_kernel_bound(GronwallData(a, 0.0, 0.5), 0.5) == 3.0


def test_series_cap():
    data = GronwallData(constant_forcing(1.0, T=5.0), 50.0, 0.5, SeriesControl(max_terms=10))
    with pytest.raises(SeriesConvergenceError):
        ml_kernel_bound(data, 5.0)


def test_data_validation():
    with pytest.raises(ValueError):
        GronwallData(constant_forcing(-1.0), 1.0, 0.5)
    with pytest.raises(ValueError):
        GronwallData(constant_forcing(1.0), -1.0, 0.5)
    with pytest.raises(ValueError):
        GronwallData(constant_forcing(1.0), 1.0, 0.0)


def test_equality_trajectory_within_discrete_bound():
    data = GronwallData(constant_forcing(1.0, 128, grading=1.5), 0.2, 0.6)
    x = picard_solution(data)
    rep = verify_inequality(x, data)
    assert rep.hypothesis_holds and abs(rep.hypothesis_margin) < 1e-10
    assert rep.bound_holds and rep.bound_margin > -1e-10


def test_series_bound_needs_quadrature_slack():
    data = GronwallData(constant_forcing(1.0, 128), 0.5, 0.6)
    x = picard_solution(data)
    rep = verify_inequality(x, data, tol=1e-4, bound="series")
    assert rep.bound_holds and rep.bound_kind == "series"


def test_zero_trajectory_strict():
    data = GronwallData(constant_forcing(1.0), 1.0, 0.5)
    x = SampledFunction(data.mesh, np.zeros(64), start=0.0)
    rep = verify_inequality(x, data)
    assert rep.hypothesis_holds and rep.hypothesis_margin >= 1.0 - 1e-12
    assert rep.bound_holds and rep.bound_margin >= 1.0 - 1e-12


def test_violated_hypothesis_is_reported():
    data = GronwallData(constant_forcing(1e-6), 0.1, 0.5)
    x = SampledFunction(data.mesh, np.full(64, 1e3), start=1e3)
    rep = verify_inequality(x, data)
    assert not rep.hypothesis_holds
    assert rep.first_failure == data.mesh.nodes[0]
    assert rep.bound_margin is None and rep.bound_holds is None


def test_mesh_mismatch_rejected():
    data = GronwallData(constant_forcing(1.0, 64), 1.0, 0.5)
    x = SampledFunction(IntervalMesh.graded(0.0, 1.0, 32), np.zeros(32))
    with pytest.raises(ValueError):
        verify_inequality(x, data)


@settings(max_examples=25, deadline=None)
@given(
    scale=st.floats(0.0, 3.0), bump=st.floats(0.0, 2.0),
    b=st.floats(0.0, 1.5), beta=st.floats(0.5, 1.0),
)
def test_bound_monotone_in_forcing(scale, bump, b, beta):
    mesh = IntervalMesh.graded(0.0, 1.0, 32)
    base = scale * (1 + np.sin(3 * mesh.nodes) ** 2)
    bigger = base + bump * mesh.nodes
    lo = ml_kernel_bound(GronwallData(SampledFunction(mesh, base, start=scale), b, beta), mesh.nodes)
    hi = ml_kernel_bound(GronwallData(SampledFunction(mesh, bigger, start=scale), b, beta), mesh.nodes)
    assert np.all(hi >= lo - 1e-12 * (1 + np.abs(lo)))
    assert np.all(lo >= base - 1e-12 * (1 + base))


@settings(max_examples=20, deadline=None)
@given(shrink=st.floats(0.0, 1.0), b=st.floats(0.05, 1.5), beta=st.floats(0.3, 1.0))
def test_picard_hypothesis_trajectories_never_exceed_bound(shrink, b, beta):
    data = GronwallData(constant_forcing(1.0, 64, grading=1.5), b, beta)
    x = picard_solution(data)
    scaled = SampledFunction(data.mesh, shrink * x.values, start=shrink * x.start)
    rep = verify_inequality(scaled, data)
    assert rep.hypothesis_holds
    assert rep.bound_holds


def test_zero_forcing_gives_zero_bound():
    mesh = IntervalMesh(0.0, 1.0, np.linspace(0.01, 1.0, 64))
    bound = ml_kernel_bound(GronwallData(SampledFunction(mesh, np.zeros(64)), 1.3, 0.7), mesh.nodes)
    np.testing.assert_array_equal(bound, 0.0)
