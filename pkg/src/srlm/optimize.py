"""Gradients of the reduced energies and the two optimisation strategies.

Shooting optimises only the initial control and lets the control evolve by
its own dynamics.  The path method optimises every control of a
time-discretised path, with no dynamics imposed.

Gradients come either from forward sensitivities (tangents propagated
through the integrator, exact for the discrete scheme) or from central
finite differences, which serve as the independent check.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .dynamics import IntegratorSpec, Trajectory, rollout
from .energy import LandmarkProblem, _matching_and_grad, matching_term, path_energy, shooting_energy
from .errors import IntegrationError, InvalidInputError, InvalidValueError
from .fields import FieldFamily


@dataclass(frozen=True)
class GradientSpec:
    mode: str = "forward-sensitivity"
    fd_step: float = 1e-6

    def __post_init__(self):
        if self.mode not in ("forward-sensitivity", "finite-difference"):
            raise InvalidInputError(f"unknown gradient mode {self.mode!r}")
        if not self.fd_step > 0:
            raise InvalidInputError("fd_step must be positive")


@dataclass(frozen=True)
class OptimizerSpec:
    """Optimiser settings.

    ``epsilon`` is the initial trial step of gradient descent (the fixed step
    when ``line_search`` is off).  Quasi-Newton starts each line search from
    the unit step.  ``ftol`` stops on a relative energy change below it.
    """

    method: str = "quasi-newton"
    epsilon: float = 1.0
    max_iters: int = 500
    grad_tol: float = 1e-8
    ftol: float = 1e-13
    c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 50
    line_search: bool = True
    memory: int = 10

    def __post_init__(self):
        if self.method not in ("gradient-descent", "quasi-newton"):
            raise InvalidInputError(f"unknown optimiser {self.method!r}")
        if not self.epsilon > 0:
            raise InvalidInputError("epsilon must be positive")
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be at least 1")
        if not (0 < self.c1 < 1) or not (0 < self.backtrack < 1):
            raise InvalidInputError("Armijo parameters must lie in (0, 1)")


@dataclass
class OptimizationReport:
    controls: np.ndarray
    energy_history: list
    grad_norm_history: list
    iterations: int
    converged: bool
    status: str
    trajectory: Trajectory | None = field(default=None, repr=False)
    matching: float = math.nan

    @property
    def final_energy(self) -> float:
        return self.energy_history[-1]

    @property
    def residual(self) -> float:
        """Square root of the final matching term."""
        return math.sqrt(self.matching)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "converged": self.converged,
            "iterations": self.iterations,
            "final_energy": float(self.final_energy),
            "matching": float(self.matching),
            "residual": float(self.residual),
            "controls": np.asarray(self.controls, dtype=float).tolist(),
            "energy_history": [float(e) for e in self.energy_history],
            "grad_norm_history": [float(g) for g in self.grad_norm_history],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _check_grad(g):
    bad = np.flatnonzero(~np.isfinite(g))
    if bad.size:
        raise InvalidValueError(f"non-finite gradient entry at coordinate {int(bad[0])}")
    return g


def _central_differences(f, x, step):
    g = np.empty(x.size)
    flat = x.ravel()
    for i in range(x.size):
        xp = flat.copy()
        xm = flat.copy()
        xp[i] += step
        xm[i] -= step
        g[i] = (f(xp.reshape(x.shape)) - f(xm.reshape(x.shape))) / (2 * step)
    return g.reshape(x.shape)


def shooting_value_and_grad(fam, problem, u0, spec, gspec=GradientSpec(), rhs_mode="quadrature"):
    u0 = np.asarray(u0, dtype=float)
    if gspec.mode == "finite-difference":
        val = shooting_energy(fam, problem, u0, spec, rhs_mode)
        g = _central_differences(lambda u: shooting_energy(fam, problem, u, spec, rhs_mode), u0, gspec.fd_step)
        return val, _check_grad(g)
    traj, dY = rollout(fam, u0, problem.sources, spec, rhs_mode, tangents=True)
    match, gy = _matching_and_grad(problem.forward_model, traj.unwrapped[-1], problem.targets, True)
    Au = fam.a_matrix @ u0
    val = 0.5 * problem.sigma * float(u0 @ Au) + match
    g = problem.sigma * Au + np.einsum("mc,mcp->p", gy, dY)
    return val, _check_grad(g)


def grad_shooting_energy(fam, problem, u0, spec, gspec=GradientSpec(), rhs_mode="quadrature") -> np.ndarray:
    """Gradient of the shooting energy with respect to the initial control."""
    return shooting_value_and_grad(fam, problem, u0, spec, gspec, rhs_mode)[1]


def path_value_and_grad(fam, problem, u_path, spec, gspec=GradientSpec()):
    u_path = np.asarray(u_path, dtype=float)
    if gspec.mode == "finite-difference":
        val = path_energy(fam, problem, u_path, spec)
        g = _central_differences(lambda p: path_energy(fam, problem, p, spec), u_path, gspec.fd_step)
        return val, _check_grad(g)
    traj, dY = rollout(fam, None, problem.sources, spec, u_path=u_path, tangents=True)
    match, gy = _matching_and_grad(problem.forward_model, traj.unwrapped[-1], problem.targets, True)
    Au = u_path @ fam.a_matrix
    h = spec.dt
    val = 0.5 * problem.sigma * h * float(np.sum(u_path * Au)) + match
    g = problem.sigma * h * Au + np.einsum("mc,mcp->p", gy, dY).reshape(u_path.shape)
    return val, _check_grad(g)


def grad_path_energy(fam, problem, u_path, spec, gspec=GradientSpec()) -> np.ndarray:
    return path_value_and_grad(fam, problem, u_path, spec, gspec)[1]


def _two_loop(g, pairs):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def minimize(fun, x0, ospec: OptimizerSpec = OptimizerSpec()):
    """Minimise ``fun(x) -> (value, grad)`` from ``x0``.

    Returns ``(x, energies, grad_norms, iterations, status)``; ``status`` is
    one of ``converged-gradient``, ``converged-energy``, ``max-iters`` or
    ``stall`` (line search exhausted its backtracks).
    """
    shape = np.shape(x0)
    x = np.asarray(x0, dtype=float).ravel().copy()

    def fg(z):
        try:
            v, g = fun(z.reshape(shape))
        except (IntegrationError, InvalidValueError):
            return math.inf, None
        return v, np.asarray(g, dtype=float).ravel()

    f, g = fg(x)
    if not math.isfinite(f):
        raise IntegrationError("energy is not finite at the initial point")
    energies, gnorms = [f], [float(np.linalg.norm(g))]
    pairs = deque(maxlen=ospec.memory)
    status = "max-iters"
    it = 0
    while True:
        if gnorms[-1] <= ospec.grad_tol:
            status = "converged-gradient"
            break
        if it >= ospec.max_iters:
            break
        it += 1

        directions = []
        if ospec.method == "quasi-newton" and pairs:
            p = _two_loop(g, list(pairs))
            if g @ p < 0:
                directions.append((p, 1.0))
        directions.append((-g, ospec.epsilon if ospec.method == "gradient-descent" else min(1.0, 1.0 / gnorms[-1])))

        accepted = None
        for p, step in directions:
            slope = float(g @ p)
            if not ospec.line_search:
                fn, gn = fg(x + step * p)
                if math.isfinite(fn):
                    accepted = (x + step * p, fn, gn)
                break
            for _ in range(ospec.max_backtracks + 1):
                xn = x + step * p
                fn, gn = fg(xn)
                if math.isfinite(fn) and fn <= f + ospec.c1 * step * slope:
                    accepted = (xn, fn, gn)
                    break
                step *= ospec.backtrack
            if accepted is not None:
                break
            pairs.clear()
        if accepted is None:
            status = "stall"
            break

        xn, fn, gn = accepted
        s, yv = xn - x, gn - g
        sy = float(s @ yv)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            pairs.append((s, yv, 1.0 / sy))
        df = f - fn
        x, f, g = xn, fn, gn
        energies.append(f)
        gnorms.append(float(np.linalg.norm(g)))
        if df <= ospec.ftol * max(1.0, abs(f)):
            status = "converged-gradient" if gnorms[-1] <= ospec.grad_tol else "converged-energy"
            break
    return x.reshape(shape), energies, gnorms, it, status


def optimize_shooting(
    fam: FieldFamily,
    problem: LandmarkProblem,
    u0_init=None,
    spec: IntegratorSpec = IntegratorSpec(),
    ospec: OptimizerSpec = OptimizerSpec(),
    gspec: GradientSpec = GradientSpec(),
    rhs_mode: str = "quadrature",
) -> OptimizationReport:
    """Optimise the initial control; the zero vector is the default start."""
    u0 = np.zeros(fam.l) if u0_init is None else np.asarray(u0_init, dtype=float)
    x, energies, gnorms, it, status = minimize(
        lambda u: shooting_value_and_grad(fam, problem, u, spec, gspec, rhs_mode), u0, ospec
    )
    traj = rollout(fam, x, problem.sources, spec, rhs_mode)
    return OptimizationReport(
        x,
        energies,
        gnorms,
        it,
        status.startswith("converged"),
        status,
        traj,
        matching_term(problem.forward_model, traj, problem.targets),
    )


def optimize_path(
    fam: FieldFamily,
    problem: LandmarkProblem,
    path_init=None,
    spec: IntegratorSpec = IntegratorSpec(),
    ospec: OptimizerSpec = OptimizerSpec(),
    gspec: GradientSpec = GradientSpec(),
) -> OptimizationReport:
    """Optimise all controls of a piecewise-constant path simultaneously."""
    shape = (spec.n_steps, fam.l)
    path = np.zeros(shape) if path_init is None else np.asarray(path_init, dtype=float)
    if path.shape != shape:
        raise InvalidInputError(f"path has shape {path.shape}, expected {shape}")
    x, energies, gnorms, it, status = minimize(
        lambda p: path_value_and_grad(fam, problem, p, spec, gspec), path, ospec
    )
    traj = rollout(fam, None, problem.sources, spec, u_path=x)
    return OptimizationReport(
        x,
        energies,
        gnorms,
        it,
        status.startswith("converged"),
        status,
        traj,
        matching_term(problem.forward_model, traj, problem.targets),
    )
