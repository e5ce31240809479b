import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from algebroid_kit import expr as ex
from algebroid_kit.errors import DomainError, DomainExit, NonFinite, ShapeError
from algebroid_kit.expr import ONE, ZERO, Var
from algebroid_kit.mechanics import (
    closed_form_error,
    conserved_report,
    hamilton_vector_field,
    harmonic_oscillator_system,
    integrate_rk4,
    make_hamiltonian_system,
)

OSC1 = harmonic_oscillator_system(1)
OSC2 = harmonic_oscillator_system(2)


def _field_at(sysm, z):
    return [ex.evaluate(e, z) for e in hamilton_vector_field(sysm)]


def test_oscillator_field_hand_values():
    assert _field_at(OSC1, (1.0, 0.0)) == [0.0, -1.0]
    assert _field_at(OSC1, (0.0, 1.0)) == [1.0, 0.0]


def test_oscillator_field_is_rotation_symbolically():
    f = hamilton_vector_field(OSC1)
    assert f[0] == Var(1)
    assert f[1] == ex.simplify(-Var(0))


def test_oscillator_structure_vanishes():
    assert OSC2.structure == {}


def test_constant_hamiltonian_gives_zero_field():
    sysm = make_hamiltonian_system([[Var(0)]], {}, ex.Const(3.0))
    assert all(c == ZERO for c in hamilton_vector_field(sysm))


def test_structure_term_enters_momentum_equation():
    # so(2)-like toy: rank 2 over a point-like base, C_12^1 = 1, H = mu2
    sysm = make_hamiltonian_system([[ZERO, ZERO]], {(0, 1, 0): ONE}, Var(2))
    f = hamilton_vector_field(sysm)
    # dmu_1/dt = -mu_g C_1b^g dH/dmu_b = -mu_1 C_12^1
    assert f[1] == ex.simplify(-Var(1))
    assert f[2] == ZERO


def test_pair_factor_for_two_oscillators():
    # dx_1/dt = mu_1 ln(x_2^2 + mu_2^2): the factor is 1 exactly when r_2^2 = e
    z = (1.0, math.sqrt(math.e), 0.5, 0.0)
    assert _field_at(OSC2, z)[0] == pytest.approx(0.5, rel=1e-15)


@pytest.mark.parametrize("jit", [False, True])
def test_quarter_turn(jit):
    tr = integrate_rk4(OSC1, (1.0, 0.0), 1e-3, math.pi / 2, jit=jit)
    assert np.max(np.abs(tr.final - [0.0, -1.0])) < 1e-6
    assert tr.times[-1] == math.pi / 2


def test_jit_and_numpy_paths_agree_bitwise():
    z0 = (math.sqrt(math.e), math.sqrt(math.e), 0.1, -0.2)
    a = integrate_rk4(OSC2, z0, 1e-2, 2.0, jit=True)
    b = integrate_rk4(OSC2, z0, 1e-2, 2.0, jit=False)
    assert np.array_equal(a.states, b.states)


def test_uniform_steps_land_on_T():
    tr = integrate_rk4(OSC1, (1.0, 0.0), 0.3, 1.0)
    assert len(tr.times) == 5
    d = np.diff(tr.times)
    assert np.all(d > 0)
    assert np.allclose(d, 0.25, rtol=0, atol=1e-15)
    assert tr.dt == 0.25


def test_zero_field_constant_trajectory():
    sysm = make_hamiltonian_system([[Var(0)]], {}, ex.Const(1.0))
    tr = integrate_rk4(sysm, (0.3, -0.2), 0.1, 1.0)
    assert np.all(tr.states == tr.states[0])


@given(st.floats(0.6, 1.4), st.floats(0.6, 1.4))
def test_radius_conserved_n1(x0, m0):
    tr = integrate_rk4(OSC1, (x0, m0), 1e-2, 1.0)
    drift = conserved_report(OSC1, tr)
    assert drift["r1^2"] < 1e-8
    assert drift["H"] < 1e-8


def test_conservation_n2_radius_e():
    e = math.sqrt(math.e)
    z0 = (e, e, 0.0, 0.0)
    tr = integrate_rk4(OSC2, z0, 1e-3, 1.0)
    assert closed_form_error(z0, tr) < 1e-5
    drift = conserved_report(OSC2, tr)
    assert max(drift.values()) < 1e-6


def test_conserved_report_with_custom_quantities():
    tr = integrate_rk4(OSC1, (1.0, 0.0), 1e-2, 1.0)
    out = conserved_report(OSC1, tr, [ex.Const(5.0), Var(0)])
    assert out["q1"] == 0.0
    assert out["q2"] > 0.1


def test_rk4_order_on_closed_form():
    errs = [closed_form_error((1.0, 0.0), integrate_rk4(OSC1, (1.0, 0.0), math.pi / 2 / n, math.pi / 2))
            for n in (16, 32)]
    assert 12 <= errs[0] / errs[1] <= 20


def test_start_outside_domain_raises():
    with pytest.raises(DomainError):
        integrate_rk4(OSC1, (0.0, 0.0), 1e-2, 1.0)


def test_domain_exit_reports_last_state():
    # H = ln(x) - mu: dx/dt = -1, so x reaches the edge of its domain at t = x0
    sysm = make_hamiltonian_system([[ONE]], {}, ex.ln(Var(0)) - Var(1),
                                   start_box=[(0.5, 1.0), (-1.0, 1.0)])
    with pytest.raises(DomainExit) as info:
        integrate_rk4(sysm, (0.5, 0.0), 1e-2, 2.0)
    err = info.value
    assert not isinstance(err, NonFinite)
    assert err.t == pytest.approx(0.49, abs=1e-9)
    assert err.state[0] == pytest.approx(0.01, abs=1e-9)


def test_non_finite_classified():
    # H = -x mu^2 at x = 0 gives dmu/dt = mu^2, which blows up at t = 1
    sysm = make_hamiltonian_system([[ONE]], {}, -Var(0) * Var(1) ** 2)
    with pytest.raises(NonFinite) as info:
        integrate_rk4(sysm, (0.0, 1.0), 0.01, 5.0)
    assert np.all(np.isfinite(info.value.state))


def test_shape_errors():
    with pytest.raises(ShapeError):
        integrate_rk4(OSC1, (1.0, 0.0, 0.0), 0.1, 1.0)
    with pytest.raises(ShapeError):
        make_hamiltonian_system([[Var(5)]], {}, Var(0))
    with pytest.raises(ValueError):
        integrate_rk4(OSC1, (1.0, 0.0), -0.1, 1.0)


def test_oscillator_start_domain_excludes_origin():
    pts = OSC2.sample_points()
    r2 = pts[:, :2] ** 2 + pts[:, 2:] ** 2
    assert np.all(r2 > 0)
