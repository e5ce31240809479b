import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from algebroid_kit import expr as ex
from algebroid_kit.errors import DimensionError, DomainError, ParseError
from algebroid_kit.expr import Add, Const, Div, Log, Mul, Neg, Pow, Var

from oracles import partial

NV = 3

consts = st.integers(-4, 4).map(lambda k: Const(float(k))) | st.sampled_from(
    [Const(0.5), Const(-1.25), Const(0.1)]
)
leaves = consts | st.integers(0, NV - 1).map(Var)


def _safe_den(e):
    # 1 + e^2 is never zero and never negative
    return Add((Const(1.0), Pow(e, 2)))


def _extend(children):
    return st.one_of(
        st.lists(children, min_size=2, max_size=3).map(lambda t: Add(tuple(t))),
        st.lists(children, min_size=2, max_size=3).map(lambda t: Mul(tuple(t))),
        children.map(Neg),
        st.tuples(children, children).map(lambda ab: Div(ab[0], _safe_den(ab[1]))),
        st.tuples(children, st.integers(0, 3)).map(lambda bk: Pow(bk[0], bk[1])),
        children.map(lambda c: Log(_safe_den(c))),
    )


trees = st.recursive(leaves, _extend, max_leaves=8)
points = st.lists(st.floats(-1.5, 1.5), min_size=NV, max_size=NV)


@given(trees)
def test_sexpr_round_trip(e):
    text = ex.to_sexpr(e)
    back = ex.parse(text)
    assert back == e
    assert ex.to_sexpr(back) == text


@given(trees, points)
def test_simplify_preserves_value(e, p):
    a = ex.evaluate(e, p)
    b = ex.evaluate(ex.simplify(e), p)
    assert b == pytest.approx(a, rel=1e-9, abs=1e-9)


@given(trees, points, st.integers(0, NV - 1))
def test_diff_matches_central_difference(e, p, i):
    exact = ex.evaluate(ex.diff(e, i), p)
    approx = partial(e, p, i, h=1e-5)
    assert exact == pytest.approx(approx, rel=1e-5, abs=1e-5)


@given(trees)
def test_simplify_idempotent(e):
    s = ex.simplify(e)
    assert ex.simplify(s) == s


def test_simplify_cancels_commuted_product():
    x, y = Var(0), Var(1)
    assert ex.simplify(x * y - y * x) == ex.ZERO
    assert ex.simplify(x + 0) == x
    assert ex.to_sexpr(ex.simplify(1 * x**2)) == "(^ x1 2)"


def test_simplify_cancels_polynomial_denominator():
    x, y = Var(0), Var(1)
    f = (x**2 + y**2) / 2
    assert ex.simplify(f * ex.diff(ex.ln(x**2 + y**2), 1)) == y


def test_parse_reference_expression():
    e = ex.parse("(/ (+ (^ x1 2) (^ x2 2)) 2)")
    assert ex.evaluate(e, (1.0, 1.0)) == 1.0
    assert ex.to_sexpr(e) == "(/ (+ (^ x1 2) (^ x2 2)) 2)"


def test_parse_with_names():
    e = ex.parse("(* mu1 (ln (+ (^ x1 2) (^ mu1 2))))", ["x1", "mu1"])
    assert ex.evaluate(e, (0.0, 1.0)) == 0.0
    assert ex.max_index(e) == 1


def test_binary_minus_parses_as_sum_with_negation():
    assert ex.parse("(- x1 x2)") == Add((Var(0), Neg(Var(1))))


@pytest.mark.parametrize(
    "text",
    ["", "(+ x1", "(+ x1 x2))", "(^ x1 1.5)", "(foo x1 x2)", "(ln x1 x2)", "(+ x1)", "x0", "abc", ")"],
)
def test_parse_errors(text):
    with pytest.raises(ParseError):
        ex.parse(text)


def test_parse_unknown_name():
    with pytest.raises(ParseError):
        ex.parse("(+ x1 y1)", ["x1"])


def test_evaluate_domain_errors():
    with pytest.raises(DomainError):
        ex.evaluate(ex.ln(Var(0)), (0.0,))
    with pytest.raises(DomainError):
        ex.evaluate(Const(1.0) / Var(0), (0.0,))
    with pytest.raises(DomainError):
        ex.evaluate_many(ex.ln(Var(0)), np.array([[1.0], [-1.0]]))


def test_evaluate_dimension_error():
    with pytest.raises(DimensionError):
        ex.evaluate(Var(2), (1.0, 2.0))


def test_evaluate_many_matches_scalar():
    e = ex.parse("(+ (* x1 x2) (ln (+ 1 (^ x1 2))))")
    pts = np.array([[0.1, 0.2], [1.0, -3.0], [2.0, 0.5]])
    many = ex.evaluate_many(e, pts)
    assert np.allclose(many, [ex.evaluate(e, p) for p in pts], rtol=0, atol=1e-15)


def test_power_requires_integer_exponent():
    with pytest.raises(TypeError):
        Var(0) ** 0.5


def test_domain_constraints_listed():
    e = ex.parse("(/ (ln x1) x2)")
    kinds = sorted(k for k, _ in ex.domain_constraints(e))
    assert kinds == ["nonzero", "positive"]


def test_substitute_and_shift():
    e = ex.parse("(* x1 x2)")
    sub = ex.substitute(e, [Var(1), Const(3.0)])
    assert ex.evaluate(sub, (0.0, 2.0)) == 6.0
    assert ex.max_index(ex.shift(e, 2)) == 3


def test_to_source_agrees_with_tree():
    e = ex.parse("(+ (/ x1 (+ 1 (^ x2 2))) (ln (+ 2 x1)) (^ x2 -2))")
    z = np.array([0.3, 0.7])
    val = eval(ex.to_source(e, "z"), {"np": np, "z": z})
    assert val == pytest.approx(ex.evaluate(e, z), rel=1e-15)


def test_is_zero():
    x = Var(0)
    assert ex.is_zero(x * (x + 1) - x**2 - x)
    assert not ex.is_zero(x)
    assert math.isclose(ex.evaluate(Const(2.0) / 4, ()), 0.5)
