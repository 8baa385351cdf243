import math

import numpy as np
import pytest

from srlm.dynamics import (
    ControlState,
    IntegratorSpec,
    SystemState,
    control_velocity,
    energy_drift,
    frozen_path_integrate,
    integrate,
    momentum_rhs_closed_form,
    momentum_rhs_quadrature,
    rollout,
    step,
)
from srlm.errors import DimensionError, IntegrationError, InvalidInputError, UnsupportedError
from srlm.torus import TWO_PI


def _state(u, y):
    return SystemState(ControlState(np.asarray(u, dtype=float)), np.asarray(y, dtype=float))


def test_spec_requires_integer_steps():
    assert IntegratorSpec("rk4", 0.25).n_steps == 4
    with pytest.raises(InvalidInputError):
        IntegratorSpec("rk4", 0.3)
    with pytest.raises(InvalidInputError):
        IntegratorSpec("leapfrog", 0.1)


def test_linear_quadrature_at_ones(families):
    fam = families["linear"]
    np.testing.assert_allclose(control_velocity(fam, np.ones(4)), [4, 4, 2, 2], atol=1e-10)
    b = momentum_rhs_quadrature(fam, np.ones(4))
    np.testing.assert_allclose(b, fam.a_matrix @ [4, 4, 2, 2], rtol=1e-10)


def test_trig_quadrature_first_coefficient(families):
    np.testing.assert_allclose(control_velocity(families["trig"], [0, 0, 1, 0]), [5 / 32, 0, 0, 0], atol=1e-12)


def test_quadratic_in_u(families, rng):
    fam = families["trig"]
    assert np.all(control_velocity(fam, np.zeros(4)) == 0)
    u = rng.uniform(-1, 1, 4)
    np.testing.assert_allclose(control_velocity(fam, 3 * u), 9 * control_velocity(fam, u), rtol=1e-12)


def test_closed_forms():
    np.testing.assert_array_equal(momentum_rhs_closed_form("constant", [3.0, -2.0]), [0, 0])
    np.testing.assert_allclose(momentum_rhs_closed_form("linear", [1, 0, 0, 1]), [0, 1, 1, 0])
    np.testing.assert_allclose(momentum_rhs_closed_form("trig", [1, 0, 1, 0]), [5 / 32, 0, -0.25, 0])
    with pytest.raises(UnsupportedError):
        momentum_rhs_closed_form("fourier10", np.zeros(10))


def test_linear_closed_form_matches_quadrature(families, rng):
    fam = families["linear"]
    for u in rng.uniform(-1, 1, (20, 4)):
        np.testing.assert_allclose(control_velocity(fam, u), momentum_rhs_closed_form("linear", u), atol=1e-10)


def test_constant_family_trivial_dynamics(families):
    np.testing.assert_allclose(control_velocity(families["constant"], [1.0, 2.0]), 0, atol=1e-12)


def test_fourier_quadrature_convergence():
    # periodic family: coarse and fine grids must agree
    from srlm.fields import family_from_config

    u = np.linspace(-1, 1, 10)
    a = control_velocity(family_from_config({"family": "fourier10", "grid_n": 16}), u)
    b = control_velocity(family_from_config({"family": "fourier10", "grid_n": 64}), u)
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_euler_step_constant(families):
    s = step(families["constant"], _state([1.0, -2.0], [[0.5, 0.5]]), IntegratorSpec("forward-euler", 0.25))
    np.testing.assert_allclose(s.landmarks, [[0.75, 0.0]])
    assert s.control.t == pytest.approx(0.25)


def test_euler_step_linear_hand_value(families):
    s = step(families["linear"], _state([0, 1, 0, 0], [[1.0, 1.0]]), IntegratorSpec("forward-euler", 0.5))
    np.testing.assert_allclose(s.control.u, [0, 2.5, 0, 0], atol=1e-10)


def test_step_wraps_landmarks(families):
    s = step(families["constant"], _state([1.0, 0.0], [[TWO_PI - 0.1, 0.0]]), IntegratorSpec("rk4", 0.5))
    np.testing.assert_allclose(s.landmarks, [[0.4, 0.0]], atol=1e-12)


def test_zero_control_is_stationary(families):
    for fam in families.values():
        s = step(fam, _state(np.zeros(fam.l), [[1.0, 2.0]]), IntegratorSpec())
        np.testing.assert_allclose(s.landmarks, [[1.0, 2.0]])


def test_step_dimension_check(families):
    with pytest.raises(DimensionError):
        step(families["constant"], _state([1.0, 2.0, 3.0], [[0, 0]]), IntegratorSpec())


def test_integrate_unit_translation(families):
    traj = integrate(families["constant"], _state([1.0, 0.0], [[0.0, 0.0]]), IntegratorSpec("rk4", 0.1))
    np.testing.assert_allclose(traj.final_landmarks, [[1.0, 0.0]], atol=1e-12)
    np.testing.assert_allclose(traj.controls[-1], traj.controls[0])
    assert np.all(np.diff(traj.times) > 0) and len(traj.states) == len(traj.times) == 11
    assert traj.times[-1] == 1.0


def test_trajectory_csv(families):
    traj = integrate(families["constant"], _state([1.0, 0.0], [[0.0, 0.0], [1, 1]]), IntegratorSpec("rk4", 0.5))
    lines = traj.to_csv().splitlines()
    assert lines[0] == "t,u_1,u_2,y1_x,y1_y,y2_x,y2_y"
    assert len(lines) == 4
    assert [float(v) for v in lines[-1].split(",")] == pytest.approx([1, 1, 0, 1, 0, 2, 1])


def test_blow_up_reports_time(families):
    # du2/dt = 3 u2^2 explodes at t = 1/(3 u2)
    with pytest.raises(IntegrationError) as info:
        rollout(families["linear"], [0, 1000, 0, 0], [[0, 0]], IntegratorSpec("forward-euler", 0.01), "closed-form")
    assert 0 < info.value.t <= 1


def test_energy_conserved_fourier(families, rng):
    u = rng.uniform(-0.5, 0.5, 10)
    assert energy_drift(families["fourier10"], u, IntegratorSpec("rk4", 1e-3)) < 1e-6


def test_frozen_path_matches_integrate_for_trivial_dynamics(families):
    fam = families["constant"]
    spec = IntegratorSpec("rk4", 0.25)
    y0 = [[0.3, 0.4], [5.0, 6.0]]
    a = frozen_path_integrate(fam, np.tile([0.7, -0.2], (4, 1)), y0, spec)
    b = integrate(fam, _state([0.7, -0.2], y0), spec)
    np.testing.assert_allclose(a.final_landmarks, b.final_landmarks, atol=1e-12)


def test_frozen_zero_path_is_identity(families):
    traj = frozen_path_integrate(families["trig"], np.zeros((10, 4)), [[1.0, 2.0]], IntegratorSpec())
    np.testing.assert_allclose(traj.final_landmarks, [[1.0, 2.0]])


def test_frozen_round_trip(families):
    traj = frozen_path_integrate(families["constant"], [[1, 0], [-1, 0]], [[2.0, 3.0]], IntegratorSpec("forward-euler", 0.5))
    np.testing.assert_allclose(traj.final_landmarks, [[2.0, 3.0]], atol=1e-15)


def test_frozen_path_length_mismatch(families):
    with pytest.raises(DimensionError):
        frozen_path_integrate(families["constant"], np.zeros((3, 2)), [[0, 0]], IntegratorSpec("rk4", 0.5))


@pytest.mark.parametrize("scheme", ["rk4", "forward-euler"])
@pytest.mark.parametrize("name", ["linear", "trig", "fourier10"])
def test_tangents_match_finite_differences(families, name, scheme, rng):
    fam = families[name]
    spec = IntegratorSpec(scheme, 0.1)
    u0 = rng.uniform(-0.3, 0.3, fam.l)
    y0 = rng.uniform(0, TWO_PI, (3, 2))
    _, dY = rollout(fam, u0, y0, spec, tangents=True)
    h = 1e-6
    for i in range(fam.l):
        e = np.eye(fam.l)[i] * h
        fd = (rollout(fam, u0 + e, y0, spec).unwrapped[-1] - rollout(fam, u0 - e, y0, spec).unwrapped[-1]) / (2 * h)
        np.testing.assert_allclose(dY[:, :, i], fd, atol=1e-7)
