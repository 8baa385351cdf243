"""Landmark file ingestion and synthetic datasets."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import InvalidInputError
from ..torus import canonicalize_array, wrap_angles

IDENTITY_HEADER = ["src_x", "src_y", "tgt_x", "tgt_y"]
LABEL_HEADER = ["src_x", "src_y", "label"]


class DatasetError(InvalidInputError):
    pass


def load_landmarks(path):
    """Read a landmark CSV.

    Returns ``(sources, targets, kind)`` where ``kind`` is ``"identity"``
    for ``src_x,src_y,tgt_x,tgt_y`` files (targets ``(m, 2)``, canonical)
    and ``"band"`` for ``src_x,src_y,label`` files (targets ``(m,)``).
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header == IDENTITY_HEADER:
        kind = "identity"
    elif header == LABEL_HEADER:
        kind = "band"
    else:
        raise DatasetError(f"{path}:1: unrecognised header {','.join(header)!r}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DatasetError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise DatasetError(f"{path}:{lineno}: non-numeric field in {row!r}") from None
        if not all(math.isfinite(v) for v in vals):
            raise DatasetError(f"{path}:{lineno}: non-finite value")
        data.append(vals)
    if not data:
        raise DatasetError(f"{path}: no landmark rows (empty dataset)")
    arr = np.array(data)
    sources = canonicalize_array(arr[:, :2])
    if kind == "identity":
        return sources, canonicalize_array(arr[:, 2:4]), kind
    labels = arr[:, 2]
    if not np.all(np.isin(labels, (0.0, 1.0))):
        bad = int(np.flatnonzero(~np.isin(labels, (0.0, 1.0)))[0]) + 2
        raise DatasetError(f"{path}:{bad}: label must be 0 or 1")
    return sources, labels, kind


def write_landmarks(path, sources, targets):
    """Write sources with torus targets ``(m, 2)`` or labels ``(m,)``."""
    targets = np.asarray(targets, dtype=float)
    header = IDENTITY_HEADER if targets.ndim == 2 else LABEL_HEADER
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for s, t in zip(np.asarray(sources, dtype=float), targets):
            if targets.ndim == 2:
                w.writerow([repr(float(v)) for v in (*s, *t)])
            else:
                w.writerow([repr(float(s[0])), repr(float(s[1])), str(int(t))])


@dataclass(frozen=True)
class SpiralParams:
    """Two Archimedean arms around (pi, pi): radius ``inner_radius + growth * theta``."""

    inner_radius: float = 0.3
    growth: float = 0.3
    theta_max: float = 2 * math.pi
    noise: float = 0.05
    per_arm: int = 100

    def __post_init__(self):
        if self.per_arm < 1:
            raise InvalidInputError("per_arm must be at least 1")
        if self.noise < 0:
            raise InvalidInputError("noise must be nonnegative")


@dataclass
class SpiralDataset:
    points: np.ndarray
    labels: np.ndarray
    params: SpiralParams
    seed: int
    exceeds_injectivity_radius: bool = field(default=False)


def generate_spirals(params: SpiralParams = SpiralParams(), seed: int = 0) -> SpiralDataset:
    """Arm ``b`` (label ``b``) sits at angle ``theta + b pi`` for evenly spaced ``theta``.

    Gaussian noise is isotropic; points are canonicalised.
    """
    rng = np.random.default_rng(seed)
    theta = np.linspace(0.0, params.theta_max, params.per_arm)
    radius = params.inner_radius + params.growth * theta
    pts, labels = [], []
    for b in (0, 1):
        arm = np.stack(
            [math.pi + radius * np.cos(theta + b * math.pi), math.pi + radius * np.sin(theta + b * math.pi)],
            axis=1,
        )
        arm = arm + rng.normal(0.0, params.noise, arm.shape)
        pts.append(arm)
        labels.append(np.full(params.per_arm, b))
    too_big = bool(np.max(np.abs(radius)) > math.pi)
    return SpiralDataset(wrap_angles(np.concatenate(pts)), np.concatenate(labels), params, seed, too_big)


def two_blobs(n: int = 24):
    """Synthetic source/target outlines for identity-model matching.

    The source is an ellipse; the target is a bent, tapered outline shifted
    to the upper right, loosely like the classic fish pair.
    """
    t = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    src = np.stack([math.pi - 0.4 + 1.1 * np.cos(t), math.pi + 0.6 * np.sin(t)], axis=1)
    tgt = np.stack(
        [
            math.pi + 1.3 * np.cos(t) + 0.15 * np.cos(2 * t),
            math.pi + 0.3 + 0.8 * np.sin(t) * (1.0 - 0.25 * np.cos(t)) + 0.2 * np.cos(t) ** 2,
        ],
        axis=1,
    )
    return wrap_angles(src), wrap_angles(tgt)
