"""Strict JSON experiment configuration."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..dynamics import RHS_MODES, IntegratorSpec
from ..energy import BAND, IDENTITY
from ..errors import ConfigError
from ..fields import BUILTIN_FAMILIES
from ..optimize import GradientSpec, OptimizerSpec
from .datasets import SpiralParams

TOP_KEYS = {"family", "problem", "integrator", "optimizer", "output_dir", "seed"}
PROBLEM_KEYS = {"landmarks", "spiral", "sample", "sigma", "unregularized", "forward_model"}
SPIRAL_KEYS = {"inner_radius", "growth", "theta_max", "noise", "per_arm"}
INTEGRATOR_KEYS = {"scheme", "h"}
OPTIMIZER_KEYS = {
    "strategy", "method", "epsilon", "max_iters", "grad_tol", "ftol", "line_search",
    "memory", "c1", "backtrack", "grad_mode", "fd_step", "rhs_mode",
}
SAMPLES = ("two_blobs",)


def _strict(block, allowed, where):
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    return block


@dataclass
class ProblemConfig:
    sigma: float
    forward_model: str = "identity"
    unregularized: bool = False
    landmarks: Path | None = None
    spiral: SpiralParams | None = None
    sample: str | None = None

    @property
    def fm(self):
        return BAND if self.forward_model == "band" else IDENTITY


@dataclass
class ExperimentConfig:
    family: dict
    problem: ProblemConfig
    integrator: IntegratorSpec = field(default_factory=IntegratorSpec)
    optimizer: OptimizerSpec = field(default_factory=OptimizerSpec)
    gradient: GradientSpec = field(default_factory=GradientSpec)
    strategy: str = "shooting"
    rhs_mode: str = "quadrature"
    output_dir: Path | None = None
    seed: int = 0

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        base_dir = Path(base_dir or ".")
        _strict(raw, TOP_KEYS, "config")
        if "family" not in raw or "problem" not in raw:
            raise ConfigError("config: 'family' and 'problem' are required")
        fam = dict(_strict(raw["family"], {"family", "alpha", "k", "grid_n", "grid_rule", "custom_fields"}, "family"))
        if fam.get("family") not in (*BUILTIN_FAMILIES, "custom"):
            raise ConfigError(f"family: unknown family {fam.get('family')!r}")

        p = _strict(raw["problem"], PROBLEM_KEYS, "problem")
        if "sigma" not in p:
            raise ConfigError("problem: 'sigma' is required")
        sigma = _number(p["sigma"], "problem.sigma")
        fm = p.get("forward_model", "identity")
        if fm not in ("identity", "band"):
            raise ConfigError(f"problem.forward_model: unknown model {fm!r}")
        sources = [k for k in ("landmarks", "spiral", "sample") if k in p]
        if len(sources) != 1:
            raise ConfigError("problem: give exactly one of 'landmarks', 'spiral', 'sample'")
        problem = ProblemConfig(sigma, fm, bool(p.get("unregularized", False)))
        if "landmarks" in p:
            path = Path(p["landmarks"])
            if not path.is_absolute():
                path = base_dir / path
            if not path.is_file():
                raise ConfigError(f"problem.landmarks: file not found: {path}")
            problem.landmarks = path
        elif "spiral" in p:
            sp = _strict(p["spiral"], SPIRAL_KEYS, "problem.spiral")
            try:
                problem.spiral = SpiralParams(**sp)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"problem.spiral: {exc}") from None
            if fm != "band":
                raise ConfigError("problem.spiral needs forward_model 'band'")
        else:
            if p["sample"] not in SAMPLES:
                raise ConfigError(f"problem.sample: unknown sample {p['sample']!r}")
            problem.sample = p["sample"]
            if fm != "identity":
                raise ConfigError("problem.sample needs forward_model 'identity'")
        if sigma < 0 or (sigma == 0 and not problem.unregularized):
            raise ConfigError("problem.sigma must be > 0, or 0 with unregularized: true")

        integ = _strict(raw.get("integrator", {}), INTEGRATOR_KEYS, "integrator")
        opt = dict(_strict(raw.get("optimizer", {}), OPTIMIZER_KEYS, "optimizer"))
        strategy = opt.pop("strategy", "shooting")
        if strategy not in ("shooting", "path"):
            raise ConfigError(f"optimizer.strategy: unknown strategy {strategy!r}")
        rhs_mode = opt.pop("rhs_mode", "quadrature")
        if rhs_mode not in RHS_MODES or rhs_mode == "frozen":
            raise ConfigError(f"optimizer.rhs_mode: must be 'quadrature' or 'closed-form', got {rhs_mode!r}")
        grad_kw = {}
        if "grad_mode" in opt:
            grad_kw["mode"] = opt.pop("grad_mode")
        if "fd_step" in opt:
            grad_kw["fd_step"] = opt.pop("fd_step")
        try:
            integrator = IntegratorSpec(**integ)
            optimizer = OptimizerSpec(**opt)
            gradient = GradientSpec(**grad_kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError("seed must be an integer")
        out = raw.get("output_dir")
        return cls(
            fam, problem, integrator, optimizer, gradient, strategy, rhs_mode,
            Path(out) if out is not None else None, seed,
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_dict(raw, path.parent)


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}: expected a finite number, got {v!r}")
    return float(v)
