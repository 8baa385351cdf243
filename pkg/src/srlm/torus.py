"""Flat torus R^2 / (2 pi Z)^2: point arithmetic, distances and quadrature.

Points are stored as angle pairs in radians.  Vectorised helpers operate on
arrays whose last axis has length 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import InvalidInputError, InvalidValueError

TWO_PI = 2.0 * math.pi


def wrap_angles(a):
    """Reduce angles into [0, 2 pi).  Works elementwise on scalars and arrays."""
    r = np.mod(a, TWO_PI)
    # np.mod(-1e-17, 2 pi) rounds to exactly 2 pi
    return np.where(r >= TWO_PI, 0.0, r)


def wrap_difference(d):
    """Reduce coordinate differences into [-pi, pi)."""
    return np.mod(np.asarray(d, dtype=float) + math.pi, TWO_PI) - math.pi


class TorusPoint(NamedTuple):
    x: float
    y: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


class TangentVector(NamedTuple):
    dx: float
    dy: float

    def __add__(self, other):
        return TangentVector(self.dx + other.dx, self.dy + other.dy)

    def __sub__(self, other):
        return TangentVector(self.dx - other.dx, self.dy - other.dy)

    def __neg__(self):
        return TangentVector(-self.dx, -self.dy)

    def __mul__(self, s):
        return TangentVector(s * self.dx, s * self.dy)

    __rmul__ = __mul__

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy])


def canonicalize(p) -> TorusPoint:
    """Return the representative of ``p`` with both coordinates in [0, 2 pi)."""
    x, y = (float(c) for c in p)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InvalidInputError(f"non-finite coordinates: ({x}, {y})")
    return TorusPoint(float(wrap_angles(x)), float(wrap_angles(y)))


def canonicalize_array(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != 2:
        raise InvalidInputError(f"expected trailing axis of length 2, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("non-finite coordinates in point array")
    return wrap_angles(pts)


def torus_distance(p, q) -> float:
    d = wrap_difference(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))
    return float(np.hypot(d[0], d[1]))


def torus_distance_array(p, q) -> np.ndarray:
    """Pairwise-aligned distances for two ``(..., 2)`` arrays."""
    d = wrap_difference(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))
    return np.hypot(d[..., 0], d[..., 1])


def _gauss_legendre(n):
    g, w = np.polynomial.legendre.leggauss(n)
    return math.pi * (g + 1.0), math.pi * w


def _periodic_trapezoid(n):
    h = TWO_PI / n
    return h * np.arange(n), np.full(n, h)


_RULES = {"gauss": _gauss_legendre, "trapezoid": _periodic_trapezoid}


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product quadrature over the chart [0, 2 pi]^2.

    ``rule="gauss"`` (default) uses Gauss-Legendre nodes per axis and is
    exact for polynomials of per-axis degree below ``2 n``, which the
    coordinate fields need.  ``rule="trapezoid"`` is the equal-weight
    periodic rule, exact for trigonometric polynomials of per-axis degree
    below ``n``.
    """

    n_per_axis: int = 128
    rule: str = "gauss"
    nodes_1d: np.ndarray = field(init=False, repr=False, compare=False)
    weights_1d: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n_per_axis) != self.n_per_axis or self.n_per_axis < 1:
            raise InvalidInputError(f"n_per_axis must be a positive integer, got {self.n_per_axis}")
        if self.rule not in _RULES:
            raise InvalidInputError(f"unknown quadrature rule {self.rule!r}")
        x, w = _RULES[self.rule](int(self.n_per_axis))
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes_1d", x)
        object.__setattr__(self, "weights_1d", w)

    @property
    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid ``(X, Y)`` of node coordinates, indexed ``[ix, iy]``."""
        return np.meshgrid(self.nodes_1d, self.nodes_1d, indexing="ij")

    @property
    def weights(self) -> np.ndarray:
        return np.outer(self.weights_1d, self.weights_1d)

    def integrate(self, values) -> float:
        return integrate_scalar(values, self)


def integrate_scalar(f: Callable | np.ndarray, grid: QuadratureGrid) -> float:
    """Approximate the integral of ``f`` over [0, 2 pi]^2.

    ``f`` is either a vectorised callable ``f(X, Y)`` or an array of node
    values shaped like ``grid.weights``.
    """
    if callable(f):
        X, Y = grid.nodes
        vals = np.broadcast_to(np.asarray(f(X, Y), dtype=float), X.shape)
    else:
        vals = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(vals)):
        ix, iy = np.argwhere(~np.isfinite(vals))[0]
        raise InvalidValueError(
            f"non-finite integrand at node ({grid.nodes_1d[ix]:.6g}, {grid.nodes_1d[iy]:.6g})"
        )
    # row sums first then a 1D dot: order-independent of any chunking upstream
    return float(np.dot(grid.weights_1d, vals @ grid.weights_1d))
