"""Forward models, matching terms and the reduced energy functionals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import IntegratorSpec, Trajectory, rollout
from .errors import DimensionError, InvalidInputError, UnsupportedError
from .fields import FieldFamily
from .torus import TorusPoint, canonicalize_array, wrap_angles, wrap_difference

LOG16 = math.log(16.0)


@dataclass(frozen=True)
class ForwardModel:
    """Map ``h: M -> N`` applied to warped landmarks before matching.

    ``identity`` keeps points on the torus and compares them with the torus
    distance.  ``band`` is ``16 ** (-(y - pi)^2 / pi^2)`` on N = [0, 1] with
    the absolute difference.  ``custom-scalar`` takes a user function of
    ``(x, y)`` and its gradient.
    """

    kind: str = "identity"
    func: Callable | None = field(default=None, compare=False)
    grad: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("identity", "band", "custom-scalar"):
            raise InvalidInputError(f"unknown forward model {self.kind!r}")
        if self.kind == "custom-scalar" and (self.func is None or self.grad is None):
            raise InvalidInputError("custom-scalar forward model needs func and grad")

    @property
    def scalar(self) -> bool:
        return self.kind != "identity"


IDENTITY = ForwardModel("identity")
BAND = ForwardModel("band")


def band_value(y):
    yw = wrap_angles(y)
    return np.power(16.0, -((yw - math.pi) ** 2) / math.pi**2)


def _band_dy(y):
    yw = wrap_angles(y)
    return band_value(y) * (-2.0 * LOG16 * (yw - math.pi) / math.pi**2)


def forward_model_eval(fm: ForwardModel, p):
    """``h(p)`` for one point or an ``(m, 2)`` array of points."""
    pts = np.asarray(p, dtype=float)
    if fm.kind == "identity":
        return TorusPoint(*wrap_angles(pts)) if pts.ndim == 1 else wrap_angles(pts)
    if fm.kind == "band":
        out = band_value(pts[..., 1])
    else:
        out = np.asarray(fm.func(pts[..., 0], pts[..., 1]), dtype=float)
    return float(out) if pts.ndim == 1 else out


@dataclass
class LandmarkProblem:
    """Sources ``x_i``, targets ``c_i``, forward model and regularisation strength.

    Targets are torus points (``(m, 2)``) for the identity model and reals of
    shape ``(m,)`` for scalar models.  ``sigma == 0`` needs
    ``unregularized=True``.
    """

    sources: np.ndarray
    targets: np.ndarray
    sigma: float = 1.0
    forward_model: ForwardModel = IDENTITY
    unregularized: bool = False

    def __post_init__(self):
        self.sources = canonicalize_array(np.atleast_2d(self.sources))
        m = len(self.sources)
        if m < 1:
            raise InvalidInputError("a problem needs at least one landmark")
        if self.forward_model.scalar:
            self.targets = np.asarray(self.targets, dtype=float).reshape(-1)
        else:
            self.targets = canonicalize_array(np.atleast_2d(self.targets))
        if len(self.targets) != m:
            raise DimensionError(f"{m} sources but {len(self.targets)} targets")
        if not math.isfinite(self.sigma) or self.sigma < 0:
            raise InvalidInputError(f"sigma must be finite and nonnegative, got {self.sigma}")
        if self.sigma == 0 and not self.unregularized:
            raise InvalidInputError("sigma = 0 requires unregularized=True")

    @property
    def m(self) -> int:
        return len(self.sources)


def _matching_and_grad(fm: ForwardModel, y, targets, want_grad=False):
    """Matching term at (unwrapped) endpoints ``y`` and its gradient in ``y``."""
    if fm.kind == "identity":
        d = wrap_difference(y - targets)
        val = float(np.sum(d * d))
        return val, (2.0 * d if want_grad else None)
    if fm.kind == "band":
        r = band_value(y[:, 1]) - targets
        g = None
        if want_grad:
            g = np.zeros_like(y)
            g[:, 1] = 2.0 * r * _band_dy(y[:, 1])
        return float(np.sum(r * r)), g
    yw = wrap_angles(y)
    r = np.asarray(fm.func(yw[:, 0], yw[:, 1]), dtype=float) - targets
    g = None
    if want_grad:
        gx, gy = fm.grad(yw[:, 0], yw[:, 1])
        g = np.stack([2.0 * r * np.asarray(gx), 2.0 * r * np.asarray(gy)], axis=1)
    return float(np.sum(r * r)), g


def matching_term(fm: ForwardModel, traj: Trajectory | np.ndarray, targets) -> float:
    """Sum of squared target-space distances between ``h(y_i(1))`` and ``c_i``.

    ``traj`` is a trajectory or directly an ``(m, 2)`` array of endpoints.
    """
    y = traj.unwrapped[-1] if isinstance(traj, Trajectory) else np.atleast_2d(np.asarray(traj, dtype=float))
    if isinstance(traj, Trajectory) and not math.isclose(traj.times[-1], 1.0):
        raise InvalidInputError("trajectory does not end at t = 1")
    targets = np.asarray(targets, dtype=float)
    if len(targets) != len(y):
        raise DimensionError(f"{len(y)} landmarks but {len(targets)} targets")
    return _matching_and_grad(fm, y, targets)[0]


def matching_residual(fm: ForwardModel, traj, targets) -> float:
    """Square root of the matching term."""
    return math.sqrt(matching_term(fm, traj, targets))


def _require_driftless(fam):
    if fam.drift is not None:
        raise UnsupportedError("the energy regulariser assumes a drift-free family")


def shooting_energy(fam: FieldFamily, problem: LandmarkProblem, u0, spec: IntegratorSpec, rhs_mode: str = "quadrature") -> float:
    """``sigma/2 u0^T A u0`` plus the matching term after integrating from ``u0``.

    The regulariser is evaluated at t = 0 only, relying on conservation of
    the kinetic energy along the control dynamics.
    """
    _require_driftless(fam)
    u0 = np.asarray(u0, dtype=float)
    traj = rollout(fam, u0, problem.sources, spec, rhs_mode)
    reg = 0.5 * problem.sigma * float(u0 @ fam.a_matrix @ u0)
    return reg + matching_term(problem.forward_model, traj, problem.targets)


def path_energy(fam: FieldFamily, problem: LandmarkProblem, u_path, spec: IntegratorSpec) -> float:
    """Time-integrated regulariser plus matching term for a frozen control path."""
    _require_driftless(fam)
    u_path = np.asarray(u_path, dtype=float)
    traj = rollout(fam, None, problem.sources, spec, u_path=u_path)
    reg = 0.5 * problem.sigma * spec.dt * float(np.einsum("ki,ij,kj->", u_path, fam.a_matrix, u_path))
    return reg + matching_term(problem.forward_model, traj, problem.targets)


def classify(fm: ForwardModel, p):
    """Label 1 where ``h(p) > 1/2``, else 0."""
    if not fm.scalar:
        raise UnsupportedError("classification needs a scalar forward model")
    val = forward_model_eval(fm, p)
    return (np.asarray(val) > 0.5).astype(int) if np.ndim(val) else int(val > 0.5)


def accuracy(fm: ForwardModel, points, labels) -> float:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    labels = np.asarray(labels).reshape(-1)
    if len(labels) != len(pts):
        raise DimensionError(f"{len(pts)} points but {len(labels)} labels")
    if len(pts) == 0:
        raise InvalidInputError("accuracy of an empty set is undefined")
    return float(np.mean(classify(fm, pts) == labels))
