import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from algebroid_kit import expr as ex
from algebroid_kit.algebroid import (
    Section,
    VectorField,
    bracket,
    identity_suite,
    random_polynomial,
    tangent_algebroid,
)
from algebroid_kit.calculus import check_morphism
from algebroid_kit.errors import ConstraintViolation, DimensionError, NotAdmissible, NotFibered, NotProjectable
from algebroid_kit.expr import ONE, ZERO, Var
from algebroid_kit.fixtures import nijenhuis_morphism, nijenhuis_oscillator, scaling_morphism
from algebroid_kit.prolongation import (
    Fibration,
    ProjectableSection,
    as_prolonged_section,
    constraint_residual,
    decompose,
    fibered_identity,
    make_element,
    projectable_bracket,
    prolong,
    prolonged_morphism,
    v_section,
    x_element,
    x_section,
)

x, y, u1, u2 = Var(0), Var(1), Var(2), Var(3)

BASES = {"tangent2": lambda: tangent_algebroid(2), "N1": lambda: nijenhuis_oscillator(1)}


@pytest.mark.parametrize("name", sorted(BASES))
def test_prolonged_anchor_is_third_factor_projection(name):
    A = BASES[name]()
    P = prolong(A, 2)
    assert (P.base_dim, P.rank) == (4, 4)
    for i in range(2):
        for a in range(2):
            assert P.anchor[i][a] == A.anchor[i][a]
        assert P.anchor[i][2] == ZERO and P.anchor[i][3] == ZERO
    for k in range(2):
        for c in range(4):
            assert P.anchor[2 + k][c] == (ONE if c == 2 + k else ZERO)


@pytest.mark.parametrize("name", sorted(BASES))
def test_prolonged_identity_suite(name):
    P = prolong(BASES[name](), 2)
    r = identity_suite(P, seed=3)
    assert r.passed, r.table()


def _random_projectable(A, q, rng):
    sigma = Section(tuple(random_polynomial(rng, A.base_dim) for _ in range(A.rank)))
    rho_s = [ex.sum_exprs(A.anchor[i][a] * sigma.coeffs[a] for a in range(A.rank)) for i in range(A.base_dim)]
    fiber = [random_polynomial(rng, A.base_dim + q) for _ in range(q)]
    return ProjectableSection(sigma, VectorField(tuple(rho_s) + tuple(fiber)))


@pytest.mark.parametrize("name", sorted(BASES))
@given(seed=st.integers(0, 10_000))
def test_projectable_bracket_matches_prolonged_bracket(name, seed):
    A = BASES[name]()
    P = prolong(A, 2)
    rng = np.random.default_rng(seed)
    Z1, Z2 = _random_projectable(A, 2, rng), _random_projectable(A, 2, rng)
    br = as_prolonged_section(A, 2, projectable_bracket(A, 2, Z1, Z2))
    ref = bracket(P, as_prolonged_section(A, 2, Z1), as_prolonged_section(A, 2, Z2))
    pts = P.sample_points()
    for a, b in zip(br.coeffs, ref.coeffs):
        assert np.max(np.abs(ex.evaluate_many(a - b, pts))) < 1e-9


def test_projectable_bracket_of_basis_sections():
    A = nijenhuis_oscillator(1)
    B = projectable_bracket(A, 2, x_section(A, 2, 0), x_section(A, 2, 1))
    assert B.sigma.coeffs[0] == ex.simplify(-y) and B.sigma.coeffs[1] == x
    B = projectable_bracket(A, 2, x_section(A, 2, 0), v_section(A, 2, 1))
    assert all(c == ZERO for c in B.sigma.coeffs)


def test_non_projectable_rejected():
    A = nijenhuis_oscillator(1)
    bad = ProjectableSection(Section((ONE, ZERO)), VectorField((ZERO, ZERO, ZERO, ZERO)))
    with pytest.raises(NotProjectable):
        projectable_bracket(A, 2, bad, x_section(A, 2, 0))
    depends_on_fiber = ProjectableSection(Section((u1, ZERO)), VectorField((ZERO,) * 4))
    with pytest.raises(NotProjectable):
        projectable_bracket(A, 2, depends_on_fiber, x_section(A, 2, 0))


def test_element_constraint_and_decomposition():
    A = nijenhuis_oscillator(1)
    z = make_element(A, 2, (1.0, 0.0, 0.3, 0.0), (1.0, 0.0), (0.0, 2.0))
    assert z.v == (0.5, 0.0, 0.0, 2.0)
    assert constraint_residual(A, 2, z) == 0.0
    b, v = decompose(A, 2, z)
    assert list(b) == [1.0, 0.0] and list(v) == [0.0, 2.0]
    broken = type(z)(z.p, z.b, (0.4, 0.0, 0.0, 2.0))
    with pytest.raises(ConstraintViolation):
        decompose(A, 2, broken)
    assert x_element(A, 2, (0.0, 2.0, 0.0, 0.0), 1).v == (0.0, 2.0, 0.0, 0.0)


def test_fibration_validation():
    with pytest.raises(DimensionError):
        Fibration(2, 0)
    with pytest.raises(DimensionError):
        prolong(tangent_algebroid(2), Fibration(3, 1))


def test_prolonged_morphism_equivalence_positive():
    A, T = nijenhuis_oscillator(1), tangent_algebroid(2)
    Phi = nijenhuis_morphism(A)
    assert check_morphism(Phi, A, T).passed
    TPhi, adm = prolonged_morphism(Phi, fibered_identity(Fibration(2, 2)), A, T, 2, 2)
    assert adm.passed
    assert check_morphism(TPhi, prolong(A, 2), prolong(T, 2)).passed


def test_prolonged_morphism_equivalence_negative():
    A = nijenhuis_oscillator(1)
    Phi = scaling_morphism(A, 2.0)
    assert not check_morphism(Phi, A, A).passed
    with pytest.raises(NotAdmissible):
        prolonged_morphism(Phi, fibered_identity(Fibration(2, 2)), A, A, 2, 2)
    TPhi, adm = prolonged_morphism(Phi, fibered_identity(Fibration(2, 2)), A, A, 2, 2,
                                   require_admissible=False)
    assert not adm.passed
    assert not check_morphism(TPhi, prolong(A, 2), prolong(A, 2)).passed


def test_prolonged_morphism_with_nontrivial_fiber_map():
    # Psi(x, y, u1, u2) = (x, y, u1 + x*y, 2 u2) over the identity
    A = nijenhuis_oscillator(1)
    Phi = scaling_morphism(A, 1.0)
    Psi = (x, y, u1 + x * y, 2 * u2)
    TPhi, _ = prolonged_morphism(Phi, Psi, A, A, 2, 2)
    assert check_morphism(TPhi, prolong(A, 2), prolong(A, 2)).passed


def test_prolonged_morphism_requires_fibered_map():
    A = nijenhuis_oscillator(1)
    Phi = scaling_morphism(A, 1.0)
    with pytest.raises(NotFibered):
        prolonged_morphism(Phi, (x + u1, y, u1, u2), A, A, 2, 2)
