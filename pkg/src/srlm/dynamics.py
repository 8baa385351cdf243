"""Control equation of motion and coupled control/landmark integration.

The control obeys ``A du/dt = b(u)`` where ``b`` is the projection of the
momentum equation onto the basis fields.  On the flat chart

    b_i(u) = int X^i . [ (Dv)^T m + (Dm) v + m div v ] dx,
    v = sum_j u_j X^j,  m = L v.

Landmarks follow ``dy/dt = F(u)(y)``.  During a rollout the landmark
coordinates are carried unwrapped (so they are differentiable in the
control); fields are always evaluated at the canonical representative.

Every integrator can propagate tangent vectors alongside the state.  This is
forward-mode differentiation of the discrete scheme: the returned tangents
are the exact derivatives of the computed endpoints, not of the continuous
flow.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, IntegrationError, InvalidInputError, UnsupportedError
from .fields import FieldFamily
from .torus import canonicalize_array, wrap_angles

RHS_MODES = ("quadrature", "closed-form", "frozen")


@dataclass(frozen=True)
class IntegratorSpec:
    scheme: str = "rk4"
    h: float = 0.1

    def __post_init__(self):
        if self.scheme not in ("rk4", "forward-euler"):
            raise InvalidInputError(f"unknown scheme {self.scheme!r}")
        if not (0 < self.h <= 1):
            raise InvalidInputError(f"step size must lie in (0, 1], got {self.h}")
        n = round(1.0 / self.h)
        if abs(n * self.h - 1.0) > 1e-9:
            raise InvalidInputError(f"1/h must be an integer, got h={self.h}")

    @property
    def n_steps(self) -> int:
        return round(1.0 / self.h)

    @property
    def dt(self) -> float:
        """The step actually used, so that ``n_steps * dt == 1``."""
        return 1.0 / self.n_steps


@dataclass
class ControlState:
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if not np.all(np.isfinite(self.u)):
            raise InvalidInputError("control contains non-finite entries")


@dataclass
class SystemState:
    control: ControlState
    landmarks: np.ndarray

    def __post_init__(self):
        self.landmarks = np.atleast_2d(np.asarray(self.landmarks, dtype=float))


@dataclass
class Trajectory:
    """Time samples of the controls and landmarks.

    ``landmarks`` holds canonical coordinates; ``unwrapped`` is the same path
    without reduction modulo 2 pi, useful for plotting and differentiation.
    """

    times: np.ndarray
    controls: np.ndarray
    landmarks: np.ndarray
    unwrapped: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.times)

    def state(self, k: int) -> SystemState:
        return SystemState(ControlState(self.controls[k].copy(), float(self.times[k])), self.landmarks[k].copy())

    @property
    def states(self) -> list[SystemState]:
        return [self.state(k) for k in range(len(self.times))]

    @property
    def final_landmarks(self) -> np.ndarray:
        return self.landmarks[-1]

    def to_csv(self) -> str:
        """CSV text with header ``t,u_1..u_l,y1_x,y1_y,...``; floats in repr form."""
        l = self.controls.shape[1]
        m = self.landmarks.shape[1]
        header = ["t"] + [f"u_{i + 1}" for i in range(l)]
        for i in range(m):
            header += [f"y{i + 1}_x", f"y{i + 1}_y"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for k, t in enumerate(self.times):
            row = [t, *self.controls[k], *self.landmarks[k].ravel()]
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


# closed forms of the control ODE for the built-in families


def _closed_linear(u):
    u1, u2, u3, u4 = u
    return np.array([3 * u1 * u2 + u3 * u4, 3 * u2**2 + u4**2, u2 * u3 + u1 * u4, 2 * u2 * u4])


def _closed_linear_jac(u):
    u1, u2, u3, u4 = u
    return np.array(
        [
            [3 * u2, 3 * u1, u4, u3],
            [0, 6 * u2, 0, 2 * u4],
            [u4, u3, u2, u1],
            [0, 2 * u4, 0, 2 * u2],
        ],
        dtype=float,
    )


def _closed_trig(u):
    # second component kept exactly as published; it is cubic and cannot come
    # from a constant-A quadratic system (see verify_dynamics)
    u1, u2, u3, u4 = u
    return np.array([5 * u3**2 / 32, -u2 * u4**2, -u1 * u3 / 4, 5 * u2**2 / 32])


def _closed_trig_jac(u):
    u1, u2, u3, u4 = u
    return np.array(
        [
            [0, 0, 5 * u3 / 16, 0],
            [0, -(u4**2), 0, -2 * u2 * u4],
            [-u3 / 4, 0, -u1 / 4, 0],
            [0, 5 * u2 / 16, 0, 0],
        ],
        dtype=float,
    )


_CLOSED_FORMS = {
    "constant": (lambda u: np.zeros(2), lambda u: np.zeros((2, 2))),
    "linear": (_closed_linear, _closed_linear_jac),
    "trig": (_closed_trig, _closed_trig_jac),
}

# components of a closed form known not to match the quadrature right-hand side
CLOSED_FORM_FLAGGED = {"trig": (1,)}


def momentum_rhs_closed_form(family_id: str, u) -> np.ndarray:
    """Published closed-form ``du/dt`` for the ``constant``, ``linear`` and ``trig`` families."""
    if family_id not in _CLOSED_FORMS:
        raise UnsupportedError(f"no closed form for family {family_id!r}")
    u = np.asarray(u, dtype=float)
    n = 2 if family_id == "constant" else 4
    if u.shape != (n,):
        raise DimensionError(f"family {family_id!r} expects {n} controls, got shape {u.shape}")
    return _CLOSED_FORMS[family_id][0](u)


def momentum_rhs_quadrature(fam: FieldFamily, u) -> np.ndarray:
    """``b(u)`` evaluated directly on the quadrature grid.

    Solving ``A du/dt = b`` gives the control velocity; see
    :func:`control_velocity`.
    """
    fam.require_dynamics()
    u = np.asarray(u, dtype=float)
    if u.shape != (fam.l,):
        raise DimensionError(f"control has shape {u.shape}, family expects ({fam.l},)")
    v = np.einsum("i,icn->cn", u, fam._vals)
    Dv = np.einsum("i,ican->can", u, fam._jac)
    m = np.einsum("i,icn->cn", u, fam._Lvals)
    Dm = np.einsum("i,ican->can", u, fam._Ljac)
    div = Dv[0, 0] + Dv[1, 1]
    force = np.einsum("acn,an->cn", Dv, m) + np.einsum("can,an->cn", Dm, v) + m * div
    return np.einsum("icn,cn,n->i", fam._vals, force, fam._w)


class _VelocityModel:
    """``du/dt`` and its Jacobian for one right-hand-side mode."""

    def __init__(self, fam: FieldFamily, mode: str):
        if mode not in RHS_MODES:
            raise InvalidInputError(f"unknown rhs mode {mode!r}")
        self.mode = mode
        self.l = fam.l
        if mode == "quadrature":
            G = fam.velocity_tensor
            self.G = G
            self.Gs = G + G.transpose(0, 2, 1)
        elif mode == "closed-form":
            if fam.family_id not in _CLOSED_FORMS:
                raise UnsupportedError(f"no closed form for family {fam.family_id!r}")
            self.f, self.jac_f = _CLOSED_FORMS[fam.family_id]

    def __call__(self, u):
        if self.mode == "quadrature":
            return np.einsum("ijk,j,k->i", self.G, u, u)
        if self.mode == "closed-form":
            return self.f(u)
        return np.zeros(self.l)

    def jac(self, u):
        if self.mode == "quadrature":
            return np.einsum("ijk,k->ij", self.Gs, u)
        if self.mode == "closed-form":
            return self.jac_f(u)
        return np.zeros((self.l, self.l))


def control_velocity(fam: FieldFamily, u, rhs_mode: str = "quadrature") -> np.ndarray:
    """``du/dt`` at ``u``: ``A^{-1} b(u)``, the closed form, or zero when frozen."""
    u = np.asarray(u, dtype=float)
    if u.shape != (fam.l,):
        raise DimensionError(f"control has shape {u.shape}, family expects ({fam.l},)")
    if rhs_mode == "quadrature":
        return fam.solve_a(momentum_rhs_quadrature(fam, u))
    return _VelocityModel(fam, rhs_mode)(u)


def kinetic_energy(fam: FieldFamily, u) -> float:
    u = np.asarray(u, dtype=float)
    return 0.5 * float(u @ fam.a_matrix @ u)


def _system_rhs(fam, model, u, y, U=None, Yt=None):
    """Right-hand side of the coupled system and, optionally, of its tangents.

    Shapes: u (l,), y (m, 2), U (l, P), Yt (m, 2, P).
    """
    vals, jacs = fam.fields_at(wrap_angles(y))
    dy = np.einsum("i,icm->mc", u, vals)
    if fam.drift is not None:
        dy = dy + fam.drift.at(wrap_angles(y))
    du = model(u)
    if U is None:
        return du, dy, None, None
    Dv = np.einsum("i,icam->mca", u, jacs)
    if fam.drift is not None:
        yw = wrap_angles(y)
        Dv = Dv + np.moveaxis(fam.drift.jacobian(yw[:, 0], yw[:, 1]), -1, 0)
    dYt = np.einsum("icm,ip->mcp", vals, U) + np.einsum("mca,map->mcp", Dv, Yt)
    dU = model.jac(u) @ U
    return du, dy, dU, dYt


def _advance(fam, model, scheme, h, u, y, U, Yt):
    tang = U is not None
    if scheme == "forward-euler":
        du, dy, dU, dYt = _system_rhs(fam, model, u, y, U, Yt)
        return (
            u + h * du,
            y + h * dy,
            U + h * dU if tang else None,
            Yt + h * dYt if tang else None,
        )
    k1 = _system_rhs(fam, model, u, y, U, Yt)
    k2 = _system_rhs(fam, model, *_shift((u, y, U, Yt), k1, h / 2))
    k3 = _system_rhs(fam, model, *_shift((u, y, U, Yt), k2, h / 2))
    k4 = _system_rhs(fam, model, *_shift((u, y, U, Yt), k3, h))
    out = []
    for idx, base in enumerate((u, y, U, Yt)):
        if base is None:
            out.append(None)
            continue
        out.append(base + h / 6 * (k1[idx] + 2 * k2[idx] + 2 * k3[idx] + k4[idx]))
    return tuple(out)


def _shift(state, k, s):
    return tuple(None if b is None else b + s * d for b, d in zip(state, k))


def _check_finite(t, *arrays):
    for a in arrays:
        if a is not None and not np.all(np.isfinite(a)):
            raise IntegrationError(f"integration blew up at t={t:.6g}", t=t)


def _as_landmarks(y0):
    y = np.atleast_2d(np.asarray(y0, dtype=float))
    if y.ndim != 2 or y.shape[1] != 2:
        raise InvalidInputError(f"landmarks must have shape (m, 2), got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("landmarks contain non-finite entries")
    return y


def step(fam: FieldFamily, state: SystemState, spec: IntegratorSpec, rhs_mode: str = "quadrature") -> SystemState:
    """One Euler or RK4 step of the coupled system; landmarks come back canonical."""
    model = _VelocityModel(fam, rhs_mode)
    u = state.control.u
    if u.shape != (fam.l,):
        raise DimensionError(f"control has shape {u.shape}, family expects ({fam.l},)")
    y = _as_landmarks(state.landmarks)
    u1, y1, _, _ = _advance(fam, model, spec.scheme, spec.dt, u, y, None, None)
    t1 = state.control.t + spec.dt
    _check_finite(t1, u1, y1)
    return SystemState(ControlState(u1, t1), wrap_angles(y1))


def rollout(fam, u0, y0, spec, rhs_mode="quadrature", u_path=None, tangents=False):
    """Integrate from t=0 to t=1.

    With ``u_path`` (shape ``(n_steps, l)``) the control is held at
    ``u_path[k]`` during step ``k`` and ``u0``/``rhs_mode`` are ignored.
    With ``tangents=True`` also returns the derivative of the final
    (unwrapped) landmarks with respect to ``u0`` (shape ``(m, 2, l)``) or,
    for a path, with respect to ``u_path.ravel()`` (shape ``(m, 2, n*l)``).
    """
    n, h, l = spec.n_steps, spec.dt, fam.l
    y = _as_landmarks(y0).copy()
    m = len(y)
    if u_path is not None:
        u_path = np.asarray(u_path, dtype=float)
        if u_path.shape != (n, l):
            raise DimensionError(f"control path has shape {u_path.shape}, expected ({n}, {l})")
        model = _VelocityModel(fam, "frozen")
        u = u_path[0].copy()
        P = n * l
    else:
        u = np.asarray(u0, dtype=float).copy()
        if u.shape != (l,):
            raise DimensionError(f"control has shape {u.shape}, family expects ({l},)")
        model = _VelocityModel(fam, rhs_mode)
        P = l
    if not np.all(np.isfinite(u)):
        raise InvalidInputError("initial control contains non-finite entries")

    U = Yt = None
    if tangents:
        Yt = np.zeros((m, 2, P))
        U = np.zeros((l, P))
        if u_path is None:
            U[:, :] = np.eye(l)

    controls = np.empty((n + 1, l))
    ys = np.empty((n + 1, m, 2))
    controls[0], ys[0] = u, y
    for k in range(n):
        if u_path is not None:
            u = u_path[k]
            if tangents:
                U = np.zeros((l, P))
                U[:, k * l:(k + 1) * l] = np.eye(l)
        with np.errstate(over="ignore", invalid="ignore"):
            u, y, U, Yt = _advance(fam, model, spec.scheme, h, u, y, U, Yt)
        _check_finite((k + 1) * h, u, y, Yt)
        controls[k + 1], ys[k + 1] = u, y
    if u_path is not None:
        controls[:n] = u_path
        controls[n] = u_path[-1]

    times = np.linspace(0.0, 1.0, n + 1)
    traj = Trajectory(times, controls, wrap_angles(ys), ys)
    if tangents:
        return traj, Yt
    return traj


def integrate(fam: FieldFamily, initial: SystemState, spec: IntegratorSpec, rhs_mode: str = "quadrature") -> Trajectory:
    """Trajectory of the coupled system from ``initial`` over [0, 1]."""
    return rollout(fam, initial.control.u, initial.landmarks, spec, rhs_mode)


def frozen_path_integrate(fam: FieldFamily, u_path, landmarks, spec: IntegratorSpec) -> Trajectory:
    """Advect landmarks under piecewise-constant controls; controls are not evolved."""
    return rollout(fam, None, landmarks, spec, u_path=u_path)


def advect_points(fam: FieldFamily, points, spec: IntegratorSpec, u0=None, rhs_mode="quadrature", u_path=None):
    """Final canonical positions of arbitrary points under a solution's flow."""
    pts = canonicalize_array(points)
    traj = rollout(fam, u0, pts, spec, rhs_mode, u_path=u_path)
    return traj.landmarks[-1]


def energy_drift(fam: FieldFamily, u0, spec: IntegratorSpec, rhs_mode: str = "quadrature") -> float:
    """Maximum relative deviation of ``u^T A u / 2`` from its initial value."""
    traj = rollout(fam, u0, np.zeros((1, 2)), spec, rhs_mode)
    e = 0.5 * np.einsum("ti,ij,tj->t", traj.controls, fam.a_matrix, traj.controls)
    return float(np.max(np.abs(e - e[0])) / max(abs(e[0]), math.ulp(1.0)))
