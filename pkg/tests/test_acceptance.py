"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line with the measured values.
Run ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import json
import math
import sys
import time

import numpy as np
import pytest

from srlm.app import cli
from srlm.app.datasets import two_blobs
from srlm.app.experiments import run_sigma_sweep
from srlm.dynamics import IntegratorSpec, control_velocity, energy_drift
from srlm.energy import BAND, LandmarkProblem, forward_model_eval
from srlm.fields import BUILTIN_FAMILIES, constant_family, fourier10_family, linear_family, trig_family
from srlm.optimize import GradientSpec, OptimizerSpec, grad_shooting_energy, optimize_shooting
from srlm.torus import TWO_PI

PI = math.pi
SIGMA_UNIT = 1.0 / (4 * PI**2)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        line = f"[criterion {number:>2}] {'PASS' if ok else 'FAIL'}  {detail}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return emit


def linear_closed(u):
    u1, u2, u3, u4 = u
    return np.array([3 * u1 * u2 + u3 * u4, 3 * u2**2 + u4**2, u2 * u3 + u1 * u4, 2 * u2 * u4])


def test_criterion_01_linear_ode(report):
    t0 = time.perf_counter()
    fam = linear_family()
    rng = np.random.default_rng(0)
    err = max(np.max(np.abs(control_velocity(fam, u) - linear_closed(u))) for u in rng.uniform(-1, 1, (100, 4)))
    dt = time.perf_counter() - t0
    report(1, err < 1e-8 and dt < 10, f"max |quadrature - printed| = {err:.2e} (< 1e-8), {dt:.2f} s (< 10 s)")


def test_criterion_02_trig_coefficients(report):
    fam = trig_family()
    a = control_velocity(fam, [0, 0, 1, 0])[0]
    b = control_velocity(fam, [1, 0, 1, 0])[2]
    ok_a = abs(a - 5 / 32) <= 1e-6
    ok_b = abs(b + 0.25) <= 1e-6
    report(
        2,
        ok_a and ok_b,
        f"du1/dt at (0,0,1,0) = {a:.10f} vs 5/32 [{'ok' if ok_a else 'off'}]; "
        f"du3/dt at (1,0,1,0) = {b:.10f} vs -1/4 [{'ok' if ok_b else 'off'}]",
    )


def test_criterion_03_energy_conservation(report):
    t0 = time.perf_counter()
    spec = IntegratorSpec("rk4", 1e-3)
    rng = np.random.default_rng(0)
    drifts = {}
    for name, build in BUILTIN_FAMILIES.items():
        fam = build()
        drifts[name] = energy_drift(fam, rng.uniform(-0.5, 0.5, fam.l), spec)
    dt = time.perf_counter() - t0
    ok = all(d < 1e-6 for d in drifts.values()) and dt < 5
    detail = ", ".join(f"{k} {v:.1e}" for k, v in drifts.items())
    report(3, ok, f"relative drift of u^T A u / 2 (< 1e-6): {detail}; {dt:.2f} s (< 5 s)")


def test_criterion_04_gradient_oracle(report):
    t0 = time.perf_counter()
    spec = IntegratorSpec("rk4", 0.1)
    fd = GradientSpec("finite-difference")
    rng = np.random.default_rng(0)
    worst = {}
    for name, build in BUILTIN_FAMILIES.items():
        fam = build()
        w = 0.0
        for _ in range(20):
            m = int(rng.integers(1, 6))
            src = rng.uniform(0, TWO_PI, (m, 2))
            problem = LandmarkProblem(src, src + rng.uniform(-1, 1, (m, 2)), float(rng.uniform(0.01, 1)))
            u0 = rng.uniform(-0.3, 0.3, fam.l)
            gs = grad_shooting_energy(fam, problem, u0, spec)
            gf = grad_shooting_energy(fam, problem, u0, spec, fd)
            w = max(w, float(np.max(np.abs(gs - gf) / np.maximum(1.0, np.abs(gf)))))
        worst[name] = w
    dt = time.perf_counter() - t0
    ok = all(v < 1e-5 for v in worst.values()) and dt < 30
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(4, ok, f"worst relative gradient gap (< 1e-5): {detail}; {dt:.2f} s (< 30 s)")


def test_criterion_05_translation_recovery(report):
    src = np.array([[0.5, 0.5], [2.0, 4.0], [5.0, 1.0]])
    problem = LandmarkProblem(src, src + [1.0, 0.5], 0.0, unregularized=True)
    rep = optimize_shooting(constant_family(), problem, np.zeros(2), IntegratorSpec("rk4", 0.1))
    gap = float(np.max(np.abs(rep.controls - [1.0, 0.5])))
    ok = rep.residual < 1e-6 and gap < 1e-4
    report(5, ok, f"residual {rep.residual:.1e} (< 1e-6), |u0 - (1, 0.5)| = {gap:.1e} (< 1e-4), {rep.iterations} iterations")


def test_criterion_06_spiral_classification(report):
    t0 = time.perf_counter()
    config = {
        "family": {"family": "fourier10"},
        "problem": {"spiral": {}, "sigma": SIGMA_UNIT, "forward_model": "band"},
        "seed": 0,
    }
    low, high = run_sigma_sweep(config, [SIGMA_UNIT, 1000 * SIGMA_UNIT])
    dt = time.perf_counter() - t0
    ok = low.acc_train >= 0.80 and low.acc_new >= 0.75 and high.acc_train < low.acc_train - 0.10 and dt < 300
    report(
        6,
        ok,
        f"sigma=1x: train {low.acc_train:.3f} (>= 0.80), new {low.acc_new:.3f} (>= 0.75); "
        f"sigma=1000x: train {high.acc_train:.3f} (< {low.acc_train - 0.10:.3f}); {dt:.1f} s (< 300 s)",
    )


def _blob_residual(fam, h):
    src, tgt = two_blobs()
    problem = LandmarkProblem(src, tgt, 0.0, unregularized=True)
    return optimize_shooting(fam, problem, None, IntegratorSpec("rk4", h), OptimizerSpec()).residual


def test_criterion_07_step_size(report):
    fourier = fourier10_family()
    r1, r01 = _blob_residual(fourier, 1.0), _blob_residual(fourier, 0.1)
    linear = linear_family()
    l01, l001 = _blob_residual(linear, 0.1), _blob_residual(linear, 0.01)
    rel = abs(l01 - l001) / max(l01, l001)
    ok = r01 <= r1 and rel < 0.05
    report(
        7,
        ok,
        f"fourier10 residual h=1 {r1:.4f} >= h=0.1 {r01:.4f}; "
        f"linear h=0.1 {l01:.5f} vs h=0.01 {l001:.5f} differ {100 * rel:.2f}% (< 5%)",
    )


def test_criterion_08_forward_model(report):
    at_pi = forward_model_eval(BAND, (1.234, PI))
    at_half = forward_model_eval(BAND, (4.0, PI / 2))
    ok = at_pi == 1.0 and abs(at_half - 0.5) <= 1e-12
    report(8, ok, f"h(., pi) = {at_pi!r} (exactly 1), h(., pi/2) = {at_half!r} (1/2 to 1e-12)")


def test_criterion_09_a_matrix(report):
    # oracle: A_ii = (1 + alpha * lambda_i) * int psi_i^2 with psi_i in (1, cos x, sin x, cos y, sin y)
    lam = np.array([0, 1, 1, 1, 1] * 2, dtype=float)
    psi_sq = np.array([4 * PI**2] + [2 * PI**2] * 4 + [4 * PI**2] + [2 * PI**2] * 4)
    expected = (1 + lam) * psi_sq
    A = fourier10_family().a_matrix
    diag_err = float(np.max(np.abs(np.diag(A) - expected) / expected))
    off = float(np.max(np.abs(A - np.diag(np.diag(A)))))
    ok = diag_err < 1e-10 and off < 1e-10
    report(9, ok, f"diagonal / (4 pi^2) = {np.round(np.diag(A) / (4 * PI**2), 12).tolist()}, rel err {diag_err:.1e}; max off-diagonal {off:.1e}")


def test_criterion_10_determinism(report, tmp_path):
    config = {
        "family": {"family": "trig"},
        "problem": {"sample": "two_blobs", "sigma": 0.001},
        "integrator": {"scheme": "rk4", "h": 0.1},
        "seed": 7,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    codes = [cli.main(["match", "--config", str(path), "--out", str(tmp_path / d)]) for d in ("a", "b")]
    a = (tmp_path / "a" / "report.json").read_bytes()
    b = (tmp_path / "b" / "report.json").read_bytes()
    report(10, codes == [0, 0] and a == b, f"exit codes {codes}, report.json byte-identical: {a == b} ({len(a)} bytes)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
