"""Problem specifications: parsing, validation, rendering."""

import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hilfer_extremal.config import (
    ProblemSpec,
    SpecError,
    SpecSyntaxError,
    build_discretization,
    build_problem,
    build_seeds,
    parse_range,
    parse_spec,
    render_spec,
)

CORPUS = sorted((Path(__file__).parent / "data" / "specs").glob("*.json"))
MINIMAL = {"orders": {"mu": 0.5, "nu": 1.0}, "A": [[1.0]], "x0": [1.0], "T": 1.0, "g": "0"}


def doc(**changes):
    d = json.loads(json.dumps(MINIMAL))
    d.update(changes)
    return json.dumps(d)


def error_path(text):
    with pytest.raises(SpecError) as info:
        parse_spec(text)
    return info.value.path


def test_minimal_defaults():
    s = parse_spec(json.dumps(MINIMAL))
    assert isinstance(s, ProblemSpec)
    assert (s.mu, s.nu, s.n, s.C) == (0.5, 1.0, 1, 0.0)
    assert s.nodes_per_interval == 256 and s.grading is None
    assert s.tol == 1e-8 and s.max_iter == 200
    assert s.tasks == ("solve",) and s.impulses == () and s.lower is None


@pytest.mark.parametrize(
    "changes,path",
    [
        ({"orders": {"mu": 0.5, "nu": 1.5}}, "orders.nu"),
        ({"orders": {"mu": 1.0, "nu": 0.5}}, "orders.mu"),
        ({"orders": {"mu": 0.5}}, "orders.nu"),
        ({"impulses": [{"time": 0.0, "phi": "x1"}]}, "impulses[0].time"),
        ({"impulses": [{"time": 1.0, "phi": "x1"}]}, "impulses[0].time"),
        ({"impulses": [{"time": 0.6, "phi": "x1"}, {"time": 0.3, "phi": "x1"}]}, "impulses[1].time"),
        ({"impulses": [{"time": 0.5, "phi": {"catalog": "sinusoidal", "params": {}}}]}, "impulses[0].phi.catalog"),
        ({"A": [[1.0, 2.0]]}, "A[0]"),
        ({"x0": []}, "x0"),
        ({"T": -1}, "T"),
        ({"C": -0.5}, "C"),
        ({"g": "sin(t)+x2"}, "g[0]"),
        ({"g": ["x1", "x1"]}, "g"),
        ({"g": {"catalog": "cubic", "params": {}}}, "g.catalog"),
        ({"g": {"catalog": "linear", "params": {"slope": 1}}}, "g.params.slope"),
        ({"mesh": {"nodes_per_interval": 1}}, "mesh.nodes_per_interval"),
        ({"mesh": {"grading": 0.5}}, "mesh.grading"),
        ({"solver": {"tol": 0}}, "solver.tol"),
        ({"tasks": ["solve", "plot"]}, "tasks[1]"),
        ({"tasks": ["verify"]}, "bounds"),
        ({"tasks": ["gronwall"], "bounds": {"lower": ["0"], "upper": ["1"]}}, "C_star"),
        ({"special": {"range": "1:0"}}, "special.range"),
        ({"colour": "red"}, "colour"),
    ],
)
def test_semantic_errors_name_the_field(changes, path):
    assert error_path(doc(**changes)) == path


def test_missing_required_field():
    d = dict(MINIMAL)
    del d["g"]
    assert error_path(json.dumps(d)) == "g"


def test_syntax_error_line_and_column():
    with pytest.raises(SpecSyntaxError) as info:
        parse_spec('{\n  "orders": {"mu": 0.5,\n "nu": 1,}\n}')
    assert (info.value.line, info.value.column) == (3, 10)


def test_parse_range():
    assert parse_range("-5:5:21") == (-5.0, 5.0, 21)
    for bad in ("1:2", "a:b:3", "0:1:1", "2:1:5"):
        with pytest.raises(SpecError):
            parse_range(bad)


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.stem)
def test_corpus_round_trip(path):
    spec = parse_spec(path.read_text())
    text = render_spec(spec)
    assert parse_spec(text) == spec
    assert render_spec(parse_spec(text)) == text


def test_corpus_size():
    assert len(CORPUS) == 20


def test_replace_keeps_validation_light():
    s = parse_spec(json.dumps(MINIMAL)).replace(tol=1e-6, nodes_per_interval=32)
    assert s.tol == 1e-6 and s.nodes_per_interval == 32


def test_build_problem_and_seeds():
    s = parse_spec((Path(__file__).parent / "data" / "specs" / "logistic.json").read_text())
    problem = build_problem(s)
    assert problem.n == 1 and problem.lam == 1.0 and problem.breakpoints == (0.0, 0.5, 1.0)
    out = problem.eval_g(np.array([0.1, 0.2]), np.array([[0.5], [0.25]]))
    np.testing.assert_allclose(out[:, 0], [0.25, 0.1875])
    assert float(problem.impulses[0].phi(np.array([0.8]))[0]) == pytest.approx(0.2)
    disc = build_discretization(s, problem)
    y0, z0 = build_seeds(s, disc)
    assert np.all(y0.raw() == 0) and np.allclose(z0.raw(), 1)


def test_catalog_matches_expression():
    cat = build_problem(parse_spec(doc(g={"catalog": "logistic", "params": {"r": 2.0, "K": 3.0}})))
    exp = build_problem(parse_spec(doc(g="2*x1*(1-x1/3)")))
    t = np.linspace(0.1, 1, 5)
    x = np.linspace(-1, 4, 5)[:, None]
    np.testing.assert_allclose(cat.eval_g(t, x), exp.eval_g(t, x))


# --------------------------------------------------------------------------
# generated specs

finite = st.floats(-10, 10, allow_nan=False).map(lambda v: round(v, 6))
exprs = st.sampled_from(["0", "x1", "x1*(1-x1)", "-x1^2", "sin(t)", "min(x1, 1)", "0.5*exp(-t)"])


@st.composite
def spec_docs(draw):
    T = draw(st.floats(0.5, 5.0).map(lambda v: round(v, 3)))
    n_imp = draw(st.integers(0, 3))
    times = sorted(draw(st.lists(st.floats(0.05, 0.95), min_size=n_imp, max_size=n_imp, unique=True)))
    times = [round(T * u, 6) for u in times]
    if len(set(times)) != len(times):
        times = []
    d = {
        "orders": {"mu": draw(st.floats(0.05, 0.95)), "nu": draw(st.floats(0.0, 1.0))},
        "A": [[draw(finite)]],
        "C": draw(st.floats(0.0, 3.0)),
        "x0": [draw(finite)],
        "T": T,
        "g": draw(st.one_of(exprs, st.just({"catalog": "linear", "params": {"k": 2.0}}))),
        "impulses": [{"time": t, "phi": draw(exprs)} for t in times],
        "mesh": {"nodes_per_interval": draw(st.integers(2, 512)), "grading": draw(st.one_of(st.none(), st.floats(1, 4)))},
        "solver": {"tol": draw(st.floats(1e-14, 1e-2)), "max_iter": draw(st.integers(1, 1000))},
        "conditions": {"samples": draw(st.integers(1, 500)), "seed": draw(st.integers(0, 2**31))},
    }
    if draw(st.booleans()):
        d["bounds"] = {"lower": ["0"], "upper": [draw(exprs)], "weighted": draw(st.booleans())}
        d["tasks"] = draw(st.sampled_from([["solve", "verify"], ["conditions"], ["solve"]]))
    return d


@settings(max_examples=200, deadline=None)
@given(spec_docs())
def test_round_trip_property(d):
    spec = parse_spec(json.dumps(d))
    assert parse_spec(render_spec(spec)) == spec
