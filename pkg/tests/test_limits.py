import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from algebroid_kit import expr as ex
from algebroid_kit.algebroid import Section, VectorField, tangent_algebroid
from algebroid_kit.errors import IncompatibleFamily, LevelError, ShapeError
from algebroid_kit.expr import ONE, ZERO, Var
from algebroid_kit.fixtures import perturbed_tangent_tower
from algebroid_kit.limits import (
    FieldFamily,
    FunctionTower,
    IndPoint,
    SectionFamily,
    euler_field_family,
    ind_equal,
    limit_eval,
    make_direct_system,
    oscillator_tower,
    prolong_system,
    push,
    tangent_tower,
    verify_direct_system,
    verify_family,
)

TOWER = tangent_tower(4)


def ind_points(sys):
    @st.composite
    def _pt(draw):
        lvl = draw(st.integers(1, len(sys)))
        n = sys.level(lvl).base_dim
        coords = draw(st.lists(st.floats(-3, 3, allow_nan=False), min_size=n, max_size=n))
        return IndPoint(lvl, coords)

    return _pt()


@given(ind_points(TOWER), st.data())
def test_push_cocycle(p, data):
    j = data.draw(st.integers(p.level, 4))
    k = data.draw(st.integers(j, 4))
    assert push(TOWER, push(TOWER, p, j), k) == push(TOWER, p, k)
    assert push(TOWER, p, p.level) == p


@given(ind_points(TOWER), ind_points(TOWER), ind_points(TOWER))
def test_ind_equal_is_equivalence(a, b, c):
    assert ind_equal(TOWER, a, a)
    assert ind_equal(TOWER, a, b) == ind_equal(TOWER, b, a)
    if ind_equal(TOWER, a, b) and ind_equal(TOWER, b, c):
        assert ind_equal(TOWER, a, c)


@given(ind_points(TOWER), st.data())
def test_point_equals_its_push(p, data):
    k = data.draw(st.integers(p.level, 4))
    assert ind_equal(TOWER, p, push(TOWER, p, k))


def test_push_errors():
    with pytest.raises(LevelError):
        push(TOWER, IndPoint(3, (0, 0, 0)), 2)
    with pytest.raises(LevelError):
        push(TOWER, IndPoint(5, (0,) * 5), 5)
    with pytest.raises(ShapeError):
        push(TOWER, IndPoint(2, (0,)), 3)


def test_tangent_tower_verifies():
    r = verify_direct_system(TOWER)
    assert r.passed, r.table()
    checks = {res.check for res in r.results}
    assert {"anchor_compat", "morphism", "bracket_compat", "leibniz_compat"} <= checks


def test_oscillator_tower_and_prolongation_verify():
    O = oscillator_tower(2)
    assert verify_direct_system(O).passed
    r = verify_direct_system(prolong_system(O, [2, 4]))
    assert r.passed, r.table()


def test_perturbed_bonding_fails_with_site():
    r = verify_direct_system(perturbed_tangent_tower(4, pair=2))
    assert not r.passed
    bad = r.failures()
    assert all(f.site.startswith("(2,3)") for f in bad)
    assert max(f.max_residual for f in bad) > 1e-3


def test_morphism_composition_matches_steps():
    m = TOWER.morphism(1, 4)
    assert m.base_map == (Var(0), ZERO, ZERO, ZERO)
    assert m.fiber[0][0] == ONE and m.fiber[3][0] == ZERO
    with pytest.raises(LevelError):
        TOWER.morphism(3, 2)


def test_euler_family_is_compatible():
    fam = euler_field_family(TOWER)
    assert verify_family(TOWER, fam).passed
    v = limit_eval(TOWER, fam, IndPoint(2, (1.0, 2.0)), check=True)
    assert list(v) == [1.0, 2.0]


def test_incompatible_field_family_detected():
    fields = [VectorField(tuple(ONE for _ in range(n))) for n in range(1, 5)]
    fam = FieldFamily(tuple(fields))
    assert not verify_family(TOWER, fam).passed
    with pytest.raises(IncompatibleFamily):
        limit_eval(TOWER, fam, IndPoint(1, (0.5,)), check=True)


def test_function_tower_restrictions():
    # f_n = sum x_i^2 restricts to f_{n-1} along the canonical injection
    fs = [ex.sum_exprs(Var(i) ** 2 for i in range(n)) for n in range(1, 5)]
    assert verify_family(TOWER, FunctionTower(tuple(fs))).passed
    assert limit_eval(TOWER, FunctionTower(tuple(fs)), IndPoint(2, (1, 2)), check=True) == 5.0
    bad = list(fs)
    bad[2] = bad[2] + 1
    assert not verify_family(TOWER, FunctionTower(tuple(bad))).passed


def test_section_family():
    secs = [Section(tuple(Var(i) for i in range(n))) for n in range(1, 5)]
    assert verify_family(TOWER, SectionFamily(tuple(secs))).passed


def test_make_direct_system_rejects_bad_shapes():
    with pytest.raises(ShapeError):
        make_direct_system([])
    with pytest.raises(ShapeError):
        make_direct_system([tangent_algebroid(2), tangent_algebroid(1)])
    with pytest.raises(ShapeError):
        make_direct_system([tangent_algebroid(1), tangent_algebroid(2)], base_bondings=[(Var(0),)])
    with pytest.raises(ShapeError):
        make_direct_system([tangent_algebroid(1), tangent_algebroid(2)],
                           base_bondings=[(ZERO, ZERO)])


def test_affine_bonding_gets_retraction():
    # eps(x) = (x + 1, 2x): affine, injective
    A1, A2 = tangent_algebroid(1), tangent_algebroid(2)
    eps = [(Var(0) + 1, 2 * Var(0))]
    lam = [((ONE,), (ex.Const(2.0),))]
    sysm = make_direct_system([A1, A2], eps, lam)
    r = sysm.retractions[0]
    assert r is not None
    pts = np.array([[0.3], [-0.7]])
    img = np.column_stack([ex.evaluate_many(e, pts) for e in eps[0]])
    back = np.column_stack([ex.evaluate_many(e, img) for e in r])
    assert np.allclose(back, pts, atol=1e-14)
    assert verify_direct_system(sysm).passed
