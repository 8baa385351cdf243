import math

import numpy as np
import pytest

from srlm.dynamics import IntegratorSpec, rollout
from srlm.energy import (
    BAND,
    IDENTITY,
    ForwardModel,
    LandmarkProblem,
    accuracy,
    classify,
    forward_model_eval,
    matching_residual,
    matching_term,
    path_energy,
    shooting_energy,
)
from srlm.errors import DimensionError, InvalidInputError, UnsupportedError
from srlm.fields import FieldFamily, scalar_field

PI = math.pi


def test_band_center_is_one():
    for x in (0.0, 1.0, 5.0):
        assert forward_model_eval(BAND, (x, PI)) == 1.0


def test_band_quarter_is_half():
    assert forward_model_eval(BAND, (2.0, PI / 2)) == pytest.approx(0.5, abs=1e-12)


def test_band_range():
    y = np.linspace(0, 2 * PI, 101)
    vals = forward_model_eval(BAND, np.stack([np.zeros_like(y), y], axis=1))
    assert np.all((vals > 0) & (vals <= 1))


def test_identity_model():
    assert tuple(forward_model_eval(IDENTITY, (1.0, 2.0))) == (1.0, 2.0)


def test_custom_scalar_model():
    fm = ForwardModel("custom-scalar", func=lambda x, y: np.cos(x), grad=lambda x, y: (-np.sin(x), 0 * y))
    assert forward_model_eval(fm, (0.0, 1.0)) == 1.0


def test_matching_exact_is_zero():
    assert matching_term(IDENTITY, np.array([[1.0, 2.0]]), [[1.0, 2.0]]) == 0.0


def test_matching_squared_distance():
    assert matching_term(IDENTITY, np.array([[0.0, 0.0]]), [[0.0, 0.3]]) == pytest.approx(0.09)


def test_matching_uses_torus_distance():
    assert matching_term(IDENTITY, np.array([[0.05, 0.0]]), [[2 * PI - 0.05, 0.0]]) == pytest.approx(0.01)


def test_matching_band_center():
    assert matching_term(BAND, np.array([[3.3, PI]]), [1.0]) == 0.0


def test_matching_count_mismatch():
    with pytest.raises(DimensionError):
        matching_term(IDENTITY, np.zeros((2, 2)), np.zeros((3, 2)))


def test_matching_residual_is_root():
    assert matching_residual(IDENTITY, np.array([[0.0, 0.0]]), [[0.3, 0.4]]) == pytest.approx(0.5)


def test_problem_validation():
    with pytest.raises(InvalidInputError):
        LandmarkProblem([[0, 0]], [[1, 1]], sigma=0.0)
    LandmarkProblem([[0, 0]], [[1, 1]], sigma=0.0, unregularized=True)
    with pytest.raises(DimensionError):
        LandmarkProblem([[0, 0], [1, 1]], [[1, 1]])
    with pytest.raises(InvalidInputError):
        LandmarkProblem([[0, 0]], [[1, 1]], sigma=-1.0)


SPEC = IntegratorSpec("rk4", 0.1)


def test_shooting_zero_at_minimum(families):
    p = LandmarkProblem([[1.0, 2.0], [3.0, 4.0]], [[1.0, 2.0], [3.0, 4.0]])
    assert shooting_energy(families["trig"], p, np.zeros(4), SPEC) == 0.0


@pytest.mark.parametrize("sigma", [0.5, 7.0])
def test_shooting_pure_mismatch(families, sigma):
    p = LandmarkProblem([[0.0, 0.0]], [[PI, 0.0]], sigma=sigma)
    assert shooting_energy(families["constant"], p, np.zeros(2), SPEC) == pytest.approx(PI**2)


def test_shooting_translation_energy(families):
    p = LandmarkProblem([[0.0, 0.0]], [[1.0, 0.0]], sigma=1.0)
    assert shooting_energy(families["constant"], p, [1.0, 0.0], SPEC) == pytest.approx(2 * PI**2, rel=1e-12)


def test_path_zero(families):
    p = LandmarkProblem([[1.0, 2.0]], [[1.0, 2.0]])
    assert path_energy(families["linear"], p, np.zeros((10, 4)), SPEC) == 0.0


def test_path_equals_shooting_for_constant_family(families):
    fam = families["constant"]
    p = LandmarkProblem([[0.5, 0.5], [2.0, 1.0]], [[1.0, 2.0], [3.0, 0.3]], sigma=0.3)
    u = np.array([0.4, -0.7])
    assert path_energy(fam, p, np.tile(u, (10, 1)), SPEC) == pytest.approx(shooting_energy(fam, p, u, SPEC), rel=1e-12)


def test_single_step_path_regulariser(families):
    p = LandmarkProblem([[0.0, 0.0]], [[1.0, 0.0]], sigma=1.0)
    assert path_energy(families["constant"], p, [[1.0, 0.0]], IntegratorSpec("rk4", 1.0)) == pytest.approx(2 * PI**2)


def test_energy_rejects_drift():
    fam = FieldFamily([scalar_field("e1", "const")], drift=scalar_field("e2", "const"))
    p = LandmarkProblem([[0, 0]], [[0, 0]])
    with pytest.raises(UnsupportedError):
        shooting_energy(fam, p, [0.0], SPEC)


def test_classify_points():
    assert classify(BAND, (0.0, PI)) == 1
    assert classify(BAND, (0.0, 0.0)) == 0
    with pytest.raises(UnsupportedError):
        classify(IDENTITY, (0.0, 0.0))


def test_accuracy_symmetric_probe():
    # two points on each side of the boundary, labels all 1
    pts = np.array([[0.0, PI / 2 + 0.1], [0.0, PI / 2 - 0.1], [1.0, 3 * PI / 2 - 0.1], [1.0, 3 * PI / 2 + 0.1]])
    assert accuracy(BAND, pts, [1, 1, 1, 1]) == 0.5


def test_accuracy_length_mismatch():
    with pytest.raises(DimensionError):
        accuracy(BAND, np.zeros((3, 2)), [0, 1])


def test_matching_from_trajectory(families):
    traj = rollout(families["constant"], [1.0, 0.5], [[0.0, 0.0]], SPEC)
    assert matching_term(IDENTITY, traj, [[1.0, 0.5]]) == pytest.approx(0.0, abs=1e-24)
