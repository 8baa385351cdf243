"""Experiment drivers: matching runs, sigma sweeps, grid warps and dynamics checks."""

from __future__ import annotations

import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..dynamics import CLOSED_FORM_FLAGGED, IntegratorSpec, control_velocity, momentum_rhs_closed_form, rollout
from ..energy import BAND, LandmarkProblem, accuracy
from ..errors import ConfigError, SRLMError
from ..fields import BUILTIN_FAMILIES, FieldFamily, family_from_config
from ..optimize import OptimizationReport, optimize_path, optimize_shooting
from ..torus import TWO_PI
from . import svg
from .config import ExperimentConfig
from .datasets import generate_spirals, load_landmarks, two_blobs

NEW_DATA_POINTS = 10_000
EXIT_OK, EXIT_CONFIG, EXIT_STALL, EXIT_NUMERIC = 0, 1, 2, 3


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SRLM_THREADS", "1")))
    except ValueError:
        return 1


def atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _as_config(config) -> ExperimentConfig:
    if isinstance(config, ExperimentConfig):
        return config
    if isinstance(config, dict):
        return ExperimentConfig.from_dict(config)
    return ExperimentConfig.load(config)


def build_problem(cfg: ExperimentConfig, sigma: float | None = None):
    """Problem instance for a config; returns ``(problem, labels_or_None)``."""
    p = cfg.problem
    sigma = p.sigma if sigma is None else sigma
    if p.landmarks is not None:
        sources, targets, kind = load_landmarks(p.landmarks)
        if kind != p.forward_model:
            raise ConfigError(f"{p.landmarks}: file holds {kind} data but forward_model is {p.forward_model!r}")
    elif p.spiral is not None:
        ds = generate_spirals(p.spiral, cfg.seed)
        sources, targets = ds.points, ds.labels.astype(float)
    else:
        sources, targets = two_blobs()
    problem = LandmarkProblem(sources, targets, sigma, p.fm, unregularized=p.unregularized)
    return problem, (targets.astype(int) if p.forward_model == "band" else None)


def _optimize(cfg, fam, problem):
    if cfg.strategy == "path":
        return optimize_path(fam, problem, None, cfg.integrator, cfg.optimizer, cfg.gradient)
    return optimize_shooting(fam, problem, None, cfg.integrator, cfg.optimizer, cfg.gradient, cfg.rhs_mode)


def solution_dict(cfg: ExperimentConfig, report: OptimizationReport) -> dict:
    return {
        "family": cfg.family,
        "integrator": {"scheme": cfg.integrator.scheme, "h": cfg.integrator.h},
        "strategy": cfg.strategy,
        "rhs_mode": cfg.rhs_mode,
        "controls": np.asarray(report.controls, dtype=float).tolist(),
    }


@dataclass
class MatchResult:
    report: OptimizationReport
    exit_code: int
    files: dict
    accuracy: float | None = None


def run_match(config, out_dir=None, grid_resolution: int = 24) -> MatchResult:
    """Optimise one configured problem and write its artifacts.

    Writes ``report.json``, ``solution.json``, ``trajectory.csv``,
    ``grid.csv``, ``grid.svg`` and ``landmarks.svg``.  ``exit_code`` is 0
    unless the line search stalled (2).
    """
    cfg = _as_config(config)
    out = Path(out_dir or cfg.output_dir or ".")
    fam = family_from_config(cfg.family)
    problem, labels = build_problem(cfg)
    report = _optimize(cfg, fam, problem)
    final = report.trajectory.landmarks[-1]
    acc = accuracy(BAND, final, labels) if labels is not None else None

    doc = {
        "family": cfg.family["family"],
        "strategy": cfg.strategy,
        "rhs_mode": cfg.rhs_mode,
        "sigma": problem.sigma,
        "forward_model": problem.forward_model.kind,
        "integrator": {"scheme": cfg.integrator.scheme, "h": cfg.integrator.h},
        "seed": cfg.seed,
        "landmarks": problem.m,
    }
    doc.update(report.to_dict())
    if acc is not None:
        doc["accuracy_before"] = accuracy(BAND, problem.sources, labels)
        doc["accuracy"] = acc
    solution = solution_dict(cfg, report)
    grid = _warp_nodes(fam, solution, grid_resolution)

    files = {
        "report": out / "report.json",
        "solution": out / "solution.json",
        "trajectory": out / "trajectory.csv",
        "grid_csv": out / "grid.csv",
        "grid_svg": out / "grid.svg",
        "landmarks_svg": out / "landmarks.svg",
    }
    atomic_write(files["report"], json.dumps(doc, indent=2) + "\n")
    atomic_write(files["solution"], json.dumps(solution, indent=2) + "\n")
    atomic_write(files["trajectory"], report.trajectory.to_csv())
    atomic_write(files["grid_csv"], grid.to_csv())
    atomic_write(files["grid_svg"], svg.grid_svg(grid.warped, "deformation grid"))
    if labels is not None:
        overlay = svg.landmark_overlay(problem.sources, final, labels=labels, band=True, title="warped landmarks")
    else:
        overlay = svg.landmark_overlay(problem.sources, final, targets=problem.targets, title="landmarks")
    atomic_write(files["landmarks_svg"], overlay)
    code = EXIT_STALL if report.status == "stall" else EXIT_OK
    return MatchResult(report, code, files, acc)


@dataclass
class DeformationGrid:
    """Nodes ``k 2pi / resolution`` for ``k = 0..resolution`` on both axes, before and after the warp."""

    resolution: int
    initial: np.ndarray
    warped: np.ndarray

    @property
    def node_count(self) -> int:
        return self.initial.shape[0] * self.initial.shape[1]

    @property
    def edge_count(self) -> int:
        n0, n1 = self.initial.shape[:2]
        return n0 * (n1 - 1) + n1 * (n0 - 1)

    def to_csv(self) -> str:
        lines = ["i,j,x0,y0,x1,y1"]
        n = self.initial.shape[0]
        for i in range(n):
            for j in range(n):
                vals = (*self.initial[i, j], *self.warped[i, j])
                lines.append(f"{i},{j}," + ",".join(repr(float(v)) for v in vals))
        return "\n".join(lines) + "\n"


def _solution_parts(solution: dict, fam=None):
    try:
        fam = fam or family_from_config(solution["family"])
        spec = IntegratorSpec(**solution["integrator"])
        strategy = solution.get("strategy", "shooting")
        rhs_mode = solution.get("rhs_mode", "quadrature")
        controls = np.asarray(solution["controls"], dtype=float)
    except KeyError as exc:
        raise ConfigError(f"solution is missing {exc.args[0]!r}") from None
    return fam, spec, strategy, rhs_mode, controls


def _warp_nodes(fam_or_none, solution: dict, resolution: int) -> DeformationGrid:
    if resolution < 1:
        raise ConfigError("resolution must be at least 1")
    fam, spec, strategy, rhs_mode, controls = _solution_parts(solution, fam_or_none)
    ticks = np.linspace(0.0, TWO_PI, resolution + 1)
    X, Y = np.meshgrid(ticks, ticks, indexing="ij")
    nodes = np.stack([X, Y], axis=-1)
    flat = nodes.reshape(-1, 2)
    if strategy == "path":
        traj = rollout(fam, None, flat, spec, u_path=controls)
    else:
        traj = rollout(fam, controls, flat, spec, rhs_mode)
    warped = traj.landmarks[-1].reshape(nodes.shape)
    return DeformationGrid(resolution, nodes, warped)


def warp_grid(solution, resolution: int = 24, out_dir=None) -> DeformationGrid:
    """Advect a regular grid through a solution's flow.

    ``solution`` is a solution dict or the path of a ``solution.json``.
    With ``out_dir`` the grid is written as ``grid.csv`` and ``grid.svg``.
    """
    if not isinstance(solution, dict):
        path = Path(solution)
        if not path.is_file():
            raise ConfigError(f"solution file not found: {path}")
        solution = json.loads(path.read_text())
    grid = _warp_nodes(None, solution, resolution)
    if out_dir is not None:
        out = Path(out_dir)
        atomic_write(out / "grid.csv", grid.to_csv())
        atomic_write(out / "grid.svg", svg.grid_svg(grid.warped))
    return grid


@dataclass
class SweepRow:
    sigma: float
    acc_train: float
    acc_new: float
    status: str

    def csv(self) -> str:
        return f"{self.sigma!r},{self.acc_train!r},{self.acc_new!r},{self.status}"


def _sweep_one(cfg: ExperimentConfig, sigma: float) -> SweepRow:
    try:
        fam = family_from_config(cfg.family)
        problem, labels = build_problem(cfg, sigma)
        report = _optimize(cfg, fam, problem)
        acc_train = accuracy(BAND, report.trajectory.landmarks[-1], labels)
        acc_new = math.nan
        if cfg.problem.spiral is not None:
            params = replace(cfg.problem.spiral, per_arm=NEW_DATA_POINTS // 2)
            fresh = generate_spirals(params, cfg.seed + 1)
            sol = solution_dict(cfg, report)
            _, spec, strategy, rhs_mode, controls = _solution_parts(sol, fam)
            if strategy == "path":
                tr = rollout(fam, None, fresh.points, spec, u_path=controls)
            else:
                tr = rollout(fam, controls, fresh.points, spec, rhs_mode)
            acc_new = accuracy(BAND, tr.landmarks[-1], fresh.labels)
        return SweepRow(float(sigma), acc_train, acc_new, report.status)
    except SRLMError as exc:
        return SweepRow(float(sigma), math.nan, math.nan, f"error: {type(exc).__name__}")


def run_sigma_sweep(config, sigmas, out_dir=None) -> list[SweepRow]:
    """Train once per sigma; report accuracy on the training points and on fresh points.

    Fresh points (10 000) come from the same spiral generator with seed
    ``seed + 1``.  Failed runs appear as rows with an error status.
    """
    cfg = _as_config(config)
    if cfg.problem.forward_model != "band":
        raise ConfigError("sigma sweep needs a classifier (band) problem")
    sigmas = [float(s) for s in sigmas]
    for s in sigmas:
        if not s > 0:
            raise ConfigError(f"sweep sigmas must be positive, got {s}")
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(lambda s: _sweep_one(cfg, s), sigmas))
    if out_dir is not None:
        text = "sigma,acc_train,acc_new,status\n" + "".join(r.csv() + "\n" for r in rows)
        atomic_write(Path(out_dir) / "sweep.csv", text)
    return rows


@dataclass
class DynamicsDiagnostic:
    """Closed form versus quadrature right-hand side for one built-in family."""

    family_id: str
    max_deviation: np.ndarray
    flagged: tuple
    quadratic_forms: dict = field(default_factory=dict)
    samples: int = 0

    def agrees(self, tol: float = 1e-8) -> list[bool]:
        return [bool(d < tol) for d in self.max_deviation]

    def format(self) -> str:
        lines = [f"family {self.family_id}: {self.samples} random controls in [-1, 1]"]
        for i, d in enumerate(self.max_deviation):
            note = "  (published form known to disagree)" if i in self.flagged else ""
            lines.append(f"  du_{i + 1}/dt  max |quadrature - closed form| = {d:.3e}{note}")
        for i, Q in self.quadratic_forms.items():
            lines.append(f"  measured du_{i + 1}/dt = u^T Q u with Q =")
            for row in Q:
                lines.append("    [" + " ".join(f"{q: .6f}" for q in row) + "]")
        return "\n".join(lines) + "\n"


def verify_dynamics(family_id: str, samples: int = 100, seed: int = 0, fam: FieldFamily | None = None) -> DynamicsDiagnostic:
    """Compare ``A^{-1} b`` from quadrature with the published closed forms.

    For components flagged as inconsistent the measured quadratic form
    (symmetric matrix ``Q`` with ``du_i/dt = u^T Q u``) is reported instead.
    """
    if family_id not in ("constant", "linear", "trig"):
        raise ConfigError(f"no closed form to verify for family {family_id!r}")
    fam = fam or BUILTIN_FAMILIES[family_id]()
    rng = np.random.default_rng(seed)
    dev = np.zeros(fam.l)
    for _ in range(samples):
        u = rng.uniform(-1.0, 1.0, fam.l)
        diff = control_velocity(fam, u) - momentum_rhs_closed_form(family_id, u)
        dev = np.maximum(dev, np.abs(diff))
    flagged = CLOSED_FORM_FLAGGED.get(family_id, ())
    G = fam.velocity_tensor
    forms = {i: 0.5 * (G[i] + G[i].T) for i in flagged}
    return DynamicsDiagnostic(family_id, dev, tuple(flagged), forms, samples)
