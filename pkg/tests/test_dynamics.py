import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shipcolav.dynamics import (ConfigError, ControlInput, SimulationFault, VesselModel, VesselState,
                                default_model, dump_model, load_model, rk4_array, rotation_matrix,
                                state_derivative, step, wrap_angle)

MODEL = default_model()
angles = st.floats(-20.0, 20.0, allow_nan=False)


def test_rotation_identity_and_quarter_turn():
    assert np.array_equal(rotation_matrix(0.0), np.eye(3))
    R = rotation_matrix(math.pi / 2)
    # body x-axis maps to east
    assert np.allclose(R[:, 0], [0.0, 1.0, 0.0], atol=1e-15)


def test_rotation_orthogonal_random():
    rng = np.random.default_rng(0)
    for psi in rng.uniform(-10, 10, 100):
        R = rotation_matrix(psi)
        assert np.allclose(R @ R.T, np.eye(3), atol=1e-14)


@given(angles)
def test_rotation_properties(psi):
    R = rotation_matrix(psi)
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert abs(np.linalg.det(R) - 1.0) < 1e-12


@given(st.floats(-1e4, 1e4, allow_nan=False))
def test_wrap_range(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    assert abs(math.remainder(w - a, 2 * math.pi)) < 1e-9


def test_wrap_boundaries():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)


def test_derivative_at_rest_is_zero():
    d = state_derivative(VesselState(10.0, -5.0, 0.7), ControlInput(), MODEL)
    assert np.array_equal(d, np.zeros(6))


def test_derivative_thrust_from_rest():
    f = ControlInput(T_u=3.0)
    d = state_derivative(VesselState(), f, MODEL)
    expected = np.linalg.solve(MODEL.M, MODEL.B @ np.array([3.0, 0.0]))
    assert np.allclose(d[3:], expected, rtol=1e-12)
    assert np.array_equal(d[:3], np.zeros(3))


def test_derivative_matches_fine_integration():
    rng = np.random.default_rng(1)
    for _ in range(10):
        x = np.concatenate([rng.uniform(-50, 50, 2), rng.uniform(-3, 3, 1),
                            rng.uniform(0.2, 1.5, 1), rng.uniform(-0.3, -0.05, 1), rng.uniform(0.05, 0.3, 1)])
        f = np.array([rng.uniform(0, 20), rng.uniform(-0.5, 0.5)])
        d = state_derivative(VesselState.from_array(x), ControlInput(*f), MODEL)
        h = 1e-4
        fwd = rk4_array(x.copy(), f, MODEL, h)
        bwd = rk4_array(x.copy(), f, MODEL, -h)
        fd = (fwd - bwd) / (2 * h)
        fd[2] = (wrap_angle(fwd[2] - bwd[2])) / (2 * h)
        assert np.allclose(fd, d, rtol=1e-6, atol=1e-9)


def test_step_at_rest_unchanged():
    s = VesselState(1.0, 2.0, 0.3)
    for dt in (0.01, 0.1, 5.0):
        assert step(s, ControlInput(), MODEL, dt) == s


def test_step_wraps_heading():
    s = VesselState(psi=math.pi - 1e-3, r=0.5)
    out = step(s, ControlInput(), MODEL, 0.1)
    assert -math.pi < out.psi <= math.pi
    assert out.psi < 0


def test_step_halving_against_substeps():
    s = VesselState(0, 0, 0.2, 1.0, -0.1, 0.2)
    f = ControlInput(10.0, 0.5)
    one = step(s, f, MODEL, 0.1)
    fine = s
    for _ in range(100):
        fine = step(fine, f, MODEL, 0.001)
    assert np.linalg.norm(one.position - fine.position) < 1e-4 * (s.speed * 0.1)


def test_step_rejects_bad_dt():
    with pytest.raises(ValueError):
        step(VesselState(), ControlInput(), MODEL, 0.0)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_step_reports_non_finite():
    bad = VesselState(u=float("inf"))
    with pytest.raises(SimulationFault) as ei:
        step(bad, ControlInput(), MODEL, 0.1)
    assert ei.value.state == bad


def test_saturation():
    tu, tr = MODEL.control_limits
    f = MODEL.saturate(ControlInput(1e9, -1e9))
    assert f == ControlInput(tu, -tr)
    assert MODEL.scale_action([2.0, -0.5]) == ControlInput(tu, -0.5 * tr)


def test_model_validation():
    with pytest.raises(ConfigError):
        default_model(M=np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(ConfigError):
        default_model(M=np.array([[1.0, 0.5, 0], [0.0, 1, 0], [0, 0, 1]]))
    with pytest.raises(ConfigError):
        default_model(width=0.0)
    with pytest.raises(ConfigError):
        load_model("/nonexistent/ship.cfg")


def test_model_file_round_trip(tmp_path):
    p = tmp_path / "ship.cfg"
    p.write_text(dump_model(MODEL))
    m2 = load_model(p)
    for k in ("M", "B", "D_linear", "D_quadratic", "D_cubic"):
        assert np.array_equal(getattr(m2, k), getattr(MODEL, k))
    assert (m2.length, m2.width, m2.U_max, m2.control_limits) == \
        (MODEL.length, MODEL.width, MODEL.U_max, MODEL.control_limits)


def test_malformed_model_file(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("[vessel]\nlength = 1\n")
    with pytest.raises(ConfigError):
        load_model(p)


nus = st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2))


@given(nus)
def test_coriolis_does_no_work(nu):
    nu = np.array(nu)
    assert abs(nu @ MODEL.coriolis(nu) @ nu) < 1e-9


@given(nus)
def test_damping_is_dissipative(nu):
    nu = np.array(nu)
    D = MODEL.damping(nu)
    assert np.linalg.eigvalsh(D + D.T).min() >= -1e-12


envelope = st.tuples(st.floats(-2, 2), st.floats(-1, 1), st.floats(-1, 1))


@given(envelope, angles, st.floats(0.01, 0.5))
def test_energy_non_increasing(nu, psi, dt):
    # velocities within the vessel's operating envelope; far outside it the
    # quadratic sway damping makes large steps stiff
    s = VesselState(0.0, 0.0, psi, *nu)
    e0 = MODEL.kinetic_energy(nu)
    out = step(s, ControlInput(), MODEL, dt)
    e1 = MODEL.kinetic_energy([out.u, out.v, out.r])
    assert e1 <= e0 * (1 + 1e-6) + 1e-12


@given(nus, angles, st.floats(-20, 20), st.floats(-1, 1))
def test_step_deterministic_and_heading_periodic(nu, psi, tu, tr):
    s = VesselState(0.0, 0.0, psi, *nu)
    f = ControlInput(tu, tr)
    a = step(s, f, MODEL, 0.1)
    assert a == step(s, f, MODEL, 0.1)
    b = step(VesselState(0.0, 0.0, psi + 2 * math.pi, *nu), f, MODEL, 0.1)
    assert abs(wrap_angle(a.psi - b.psi)) < 1e-9
    assert np.allclose(a.as_array()[[0, 1, 3, 4, 5]], b.as_array()[[0, 1, 3, 4, 5]], atol=1e-9)


def test_custom_matrix_functions():
    m = VesselModel(M=np.eye(3), B=np.array([[1.0, 0], [0, 0], [0, 1]]), length=1, width=1, U_max=1,
                    control_limits=(1, 1), C_fn=lambda nu: np.zeros((3, 3)), D_fn=lambda nu: np.eye(3))
    d = state_derivative(VesselState(u=1.0), ControlInput(), m)
    assert np.allclose(d, [1, 0, 0, -1, 0, 0])
