import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from algebroid_kit import expr as ex
from algebroid_kit.algebroid import (
    Section,
    anchor_apply,
    basis_section,
    bracket,
    check_anchor_bracket_compat,
    check_jacobi,
    check_leibniz,
    check_nijenhuis,
    identity_suite,
    make_algebroid,
    nijenhuis_algebroid,
    perturbed_bracket,
    poisson_cotangent_algebroid,
    random_polynomial,
    random_section,
    tangent_algebroid,
)
from algebroid_kit.errors import DomainError, RankMismatch, ShapeError
from algebroid_kit.expr import ONE, ZERO, Var
from algebroid_kit.fixtures import corrupted_almost_algebroid, nijenhuis_oscillator, symplectic_poisson

from oracles import bracket_at, lie_bracket_fields_at

x, y, z = Var(0), Var(1), Var(2)


def _sections(A, seed):
    rng = np.random.default_rng(seed)
    return random_section(A, rng), random_section(A, rng)


ALGEBROIDS = {
    "tangent3": lambda: tangent_algebroid(3),
    "N1": lambda: nijenhuis_oscillator(1),
    "poisson_lin": lambda: poisson_cotangent_algebroid([[0, x], [-x, 0]]),
    "so3": lambda: poisson_cotangent_algebroid([[0, z, -y], [-z, 0, x], [y, -x, 0]]),
}


@pytest.mark.parametrize("name", sorted(ALGEBROIDS))
@given(seed=st.integers(0, 10_000))
def test_bracket_matches_difference_oracle(name, seed):
    A = ALGEBROIDS[name]()
    s1, s2 = _sections(A, seed)
    br = bracket(A, s1, s2)
    for p in A.sample_points(4):
        got = np.array([ex.evaluate(c, p) for c in br.coeffs])
        want = bracket_at(A, s1.coeffs, s2.coeffs, p)
        assert np.allclose(got, want, rtol=1e-6, atol=1e-6)


@given(seed=st.integers(0, 10_000))
def test_tangent_bracket_is_vector_field_bracket(seed):
    A = tangent_algebroid(3)
    s1, s2 = _sections(A, seed)
    br = bracket(A, s1, s2)
    for p in A.sample_points(4):
        got = np.array([ex.evaluate(c, p) for c in br.coeffs])
        want = lie_bracket_fields_at(s1.coeffs, s2.coeffs, p)
        assert np.allclose(got, want, rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("name", sorted(ALGEBROIDS))
@given(seed=st.integers(0, 10_000))
def test_bracket_antisymmetric(name, seed):
    A = ALGEBROIDS[name]()
    s1, s2 = _sections(A, seed)
    a, b = bracket(A, s1, s2), bracket(A, s2, s1)
    for ca, cb in zip(a.coeffs, b.coeffs):
        assert ex.is_zero(ca + cb)


def test_nijenhuis_bracket_of_coordinate_sections():
    # [e_x, e_y]_N = -y e_x + x e_y for N = (x^2+y^2)/2 Id
    A = nijenhuis_oscillator(1)
    br = bracket(A, basis_section(A, 0), basis_section(A, 1))
    assert br.coeffs[0] == ex.simplify(-y)
    assert br.coeffs[1] == x


def test_nijenhuis_anchor_is_N():
    A = nijenhuis_oscillator(1)
    f = ex.simplify((x**2 + y**2) / 2)
    assert ex.simplify(A.rho(0, 0)) == f and A.rho(0, 1) == ZERO
    assert A.flags["nijenhuis"].passed


def test_non_nijenhuis_tensor_is_flagged():
    N = [[ZERO, x], [ONE, ZERO]]
    report = check_nijenhuis(N)
    assert not report.passed


def test_linear_poisson_structure_function():
    A = poisson_cotangent_algebroid([[0, x], [-x, 0]])
    assert A.C(0, 1, 0) == ONE
    assert A.C(1, 0, 0) == ex.simplify(-ONE)
    assert A.flags["jacobi"].passed


def test_non_poisson_bivector_is_flagged():
    A = poisson_cotangent_algebroid([[0, z, x], [-z, 0, y], [-x, -y, 0]])
    assert not A.flags["jacobi"].passed


@pytest.mark.parametrize(
    "A",
    [tangent_algebroid(3), nijenhuis_oscillator(1), symplectic_poisson(1), nijenhuis_oscillator(2)],
    ids=["tangent3", "N1", "symplectic", "N2"],
)
def test_identity_suite_passes(A):
    report = identity_suite(A, seed=7)
    assert report.passed, report.table()
    assert report.max_residual < 1e-9


def test_leibniz_with_explicit_function():
    A = nijenhuis_oscillator(1)
    s1, s2 = basis_section(A, 0), Section((y, x * y))
    r = check_leibniz(A, s1, x**2 + 1, s2)
    assert r.passed


def test_corrupted_structure_fails_jacobi_with_site():
    A = corrupted_almost_algebroid()
    r = check_jacobi(A)
    assert not r.passed
    worst = r.worst()
    assert worst.max_residual > 1e-3
    assert worst.site and worst.point is not None
    assert not check_anchor_bracket_compat(A).passed


def test_structure_bump_cannot_break_leibniz():
    # a tensorial change of C keeps the Leibniz rule; only anchor changes break it
    A = tangent_algebroid(2)
    s1, s2 = basis_section(A, 0), Section((y, x))
    bumped = perturbed_bracket(A, "structure", (0, 1, 0), 1.0)
    assert check_leibniz(A, s1, x, s2, bracket_fn=bumped).passed
    bad_anchor = perturbed_bracket(A, "anchor", (0, 0), 1.0)
    r = check_leibniz(A, s1, x * y, s2, bracket_fn=bad_anchor)
    assert not r.passed and r.max_residual > 1e-3


def test_anchor_apply_on_basis():
    A = nijenhuis_oscillator(1)
    v = anchor_apply(A, basis_section(A, 1))
    assert v.comps[0] == ZERO and ex.simplify(v.comps[1]) == ex.simplify(A.rho(1, 1))


def test_rank_mismatch():
    A = tangent_algebroid(2)
    with pytest.raises(RankMismatch):
        bracket(A, Section((x,)), Section((x, y)))


def test_make_algebroid_validation():
    with pytest.raises(ShapeError):
        make_algebroid([])
    with pytest.raises(ShapeError):
        make_algebroid([[1, 0], [0]])
    with pytest.raises(ShapeError):
        make_algebroid([[1]], {(0, 1, 0): x})
    with pytest.raises(DomainError):
        make_algebroid([[ex.ln(x)]], sample_box=[(-1, 1)])


def test_structure_is_antisymmetrised():
    A = make_algebroid([[1, 0], [0, 1]], {(1, 0, 0): x})
    assert A.C(0, 1, 0) == ex.simplify(-x)
    assert A.C(1, 0, 0) == x


def test_random_polynomial_deterministic():
    a = random_polynomial(np.random.default_rng(3), 2)
    b = random_polynomial(np.random.default_rng(3), 2)
    assert a == b
