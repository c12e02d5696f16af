"""Expression language: grammar, errors, and agreement with a reference interpreter."""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from hilfer_extremal.expr import ExpressionError, parse_expression


def ev(src, x=(0.5,), t=0.0, dim=None):
    dim = len(x) if dim is None else dim
    return float(parse_expression(src, dim)(t, np.array(x)))


class TestGrammar:
    def test_logistic(self):
        assert ev("x1*(1-x1)", (0.5,)) == 0.25

    def test_power_right_associative(self):
        assert ev("2^3^2") == 512.0

    def test_power_binds_tighter_than_unary_minus(self):
        assert ev("-2^2") == -4.0
        assert ev("(-2)^2") == 4.0
        assert ev("2^-1") == 0.5

    def test_precedence(self):
        assert ev("1+2*3") == 7.0
        assert ev("8/4/2") == 1.0
        assert ev("10-4-3") == 3.0
        assert ev("2*3^2") == 18.0

    def test_functions(self):
        assert ev("min(x1, 2) + max(-1, abs(-3))", (5.0,)) == 5.0
        assert ev("exp(0)+cos(0)+sin(0)") == 2.0
        assert ev("t*x2", (1.0, 4.0), t=0.25) == 1.0

    def test_numbers(self):
        assert ev("1.5e2 + .5 + 2.") == 152.5

    def test_vectorized(self):
        e = parse_expression("t + x1*x2", 2)
        t = np.array([0.0, 1.0, 2.0])
        x = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        np.testing.assert_array_equal(e(t, x), [2.0, 13.0, 32.0])
        assert e(0.0, x).shape == (3,)

    def test_equality_by_source(self):
        assert parse_expression("x1+1", 1) == parse_expression("x1+1", 1)
        assert parse_expression("x1+1", 1) != parse_expression("1+x1", 1)
        assert len({parse_expression("t", 1), parse_expression("t", 1)}) == 1


class TestErrors:
    def test_unknown_identifier_position(self):
        with pytest.raises(ExpressionError) as info:
            parse_expression("sin(t)+x2", 1)
        assert info.value.position == 7 and "x2" in str(info.value)

    @pytest.mark.parametrize(
        "src,pos",
        [("1+", 2), ("(1+2", 4), ("1 $ 2", 2), ("3 4", 2), ("", 0), ("x0", 0), ("foo(1)", 0)],
    )
    def test_syntax_positions(self, src, pos):
        with pytest.raises(ExpressionError) as info:
            parse_expression(src, 1)
        assert info.value.position == pos

    def test_arity(self):
        with pytest.raises(ExpressionError, match="takes 2"):
            parse_expression("min(1)", 1)
        with pytest.raises(ExpressionError, match="takes 1"):
            parse_expression("sin(1, 2)", 1)
        with pytest.raises(ExpressionError, match="needs arguments"):
            parse_expression("exp + 1", 1)

    def test_division_by_zero(self):
        with pytest.raises(ZeroDivisionError):
            ev("1/(x1-0.5)")

    def test_dimension_checked(self):
        with pytest.raises(ValueError):
            parse_expression("x1", 2)(0.0, np.array([1.0]))
        with pytest.raises(ValueError):
            parse_expression("x1", 0)


# --------------------------------------------------------------------------
# random ASTs against a reference interpreter

DIM = 2
_UNARY = {"sin": math.sin, "cos": math.cos, "exp": math.exp, "abs": abs}
_BINARY = {"min": min, "max": max}
PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}

leaves = st.one_of(
    st.floats(0.0, 4.0, allow_nan=False).map(lambda v: ("num", round(v, 3))),
    st.just(("t",)),
    st.integers(0, DIM - 1).map(lambda i: ("x", i)),
)


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda a: ("bin", *a)),
        children.map(lambda c: ("neg", c)),
        st.tuples(st.sampled_from(sorted(_UNARY)), children).map(lambda a: ("call", a[0], (a[1],))),
        st.tuples(st.sampled_from(sorted(_BINARY)), children, children).map(lambda a: ("call", a[0], (a[1], a[2]))),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


def prec(node):
    if node[0] == "bin":
        return PREC[node[1]]
    if node[0] == "neg":
        return PREC["neg"]
    return 5


def render(node):
    """Source text with only the parentheses the grammar requires."""
    kind = node[0]
    if kind == "num":
        return repr(node[1])
    if kind == "t":
        return "t"
    if kind == "x":
        return f"x{node[1] + 1}"
    if kind == "neg":
        inner = render(node[1])
        return "-" + (f"({inner})" if prec(node[1]) < 3 else inner)
    if kind == "call":
        return f"{node[1]}({', '.join(render(a) for a in node[2])})"
    op, lhs, rhs = node[1], node[2], node[3]
    p = PREC[op]
    if op == "^":
        left = render(lhs) if prec(lhs) == 5 else f"({render(lhs)})"
        right = render(rhs) if prec(rhs) >= 3 else f"({render(rhs)})"
        return f"{left}^{right}"
    left = render(lhs) if prec(lhs) >= p else f"({render(lhs)})"
    right = render(rhs) if prec(rhs) > p else f"({render(rhs)})"
    return f"{left} {op} {right}"


class _Undefined(Exception):
    pass


def reference(node, t, x, scale):
    """Plain-Python evaluation; ``scale`` collects the largest intermediate magnitude."""
    kind = node[0]
    if kind == "num":
        v = node[1]
    elif kind == "t":
        v = t
    elif kind == "x":
        v = x[node[1]]
    elif kind == "neg":
        v = -reference(node[1], t, x, scale)
    elif kind == "call":
        args = [reference(a, t, x, scale) for a in node[2]]
        fn = _UNARY.get(node[1]) or _BINARY[node[1]]
        try:
            v = fn(*args)
        except OverflowError:
            raise _Undefined from None
    else:
        a, b = reference(node[2], t, x, scale), reference(node[3], t, x, scale)
        op = node[1]
        if op == "/" and b == 0:
            raise ZeroDivisionError
        try:
            v = {"+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b, "/": lambda: a / b,
                 "^": lambda: math.pow(a, b)}[op]()
        except (ValueError, OverflowError, ZeroDivisionError):
            raise _Undefined from None
    if not math.isfinite(v) or abs(v) > 1e100:
        raise _Undefined
    scale.append(abs(v))
    return v


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(
    tree=trees,
    t=st.floats(0.0, 3.0),
    x=st.lists(st.floats(-3.0, 3.0), min_size=DIM, max_size=DIM),
)
def test_matches_reference_interpreter(tree, t, x):
    src = render(tree)
    expr = parse_expression(src, DIM)
    assert expr.tree == tree, src
    scale = []
    try:
        want = reference(tree, t, x, scale)
    except _Undefined:
        assume(False)
    except ZeroDivisionError:
        with pytest.raises(ZeroDivisionError):
            expr(t, np.array(x))
        return
    got = float(expr(t, np.array(x)))
    # each operation may differ by an ulp; rounding propagates relative to the
    # largest intermediate value
    assert abs(got - want) <= 1e-12 * (1.0 + max(scale)), src
