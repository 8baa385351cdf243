"""Control-affine vector-field families on the flat torus.

A family is ``F(u) = X0 + sum_i u_i X^i`` with basis fields ``X^i`` given in
the global frame ``(e1, e2)``.  Fields are evaluated on the chart
[0, 2 pi]^2; the coordinate fields (``x e1`` etc.) are not periodic and are
used on the chart as-is.

Array conventions: a field value at points ``(x, y)`` of shape ``S`` is an
array of shape ``(2, *S)``; a Jacobian is ``(2, 2, *S)`` with
``J[c, a] = d X_c / d x_a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    ConfigError,
    DimensionError,
    InvalidInputError,
    SingularFamilyError,
    UnsupportedError,
)
from .torus import QuadratureGrid, TangentVector, TorusPoint

COND_LIMIT = 1e12
FD_STEP = 1e-5
RANK_TOL = 1e-8

_COMPONENTS = {"e1": 0, "e2": 1}


@dataclass(frozen=True)
class BasisField:
    """A vector field on the chart with value, Jacobian and componentwise Laplacian.

    ``eigenvalue`` is set when ``laplacian == -eigenvalue * value``; the
    metric operator then acts on the field by a scalar factor, for any order.
    """

    name: str
    value: Callable
    jacobian: Callable
    laplacian: Callable
    eigenvalue: float | None = None

    def __call__(self, x, y):
        return self.value(x, y)

    def at(self, points) -> np.ndarray:
        """Values at a ``(..., 2)`` array of points, shaped ``(..., 2)``."""
        pts = np.asarray(points, dtype=float)
        return np.moveaxis(self.value(pts[..., 0], pts[..., 1]), 0, -1)

    def scaled(self, s: float, name: str | None = None) -> "BasisField":
        return BasisField(
            name or f"{s:g}*({self.name})",
            lambda x, y: s * self.value(x, y),
            lambda x, y: s * self.jacobian(x, y),
            lambda x, y: s * self.laplacian(x, y),
            self.eigenvalue,
        )

    @classmethod
    def from_function(cls, name: str, value: Callable, step: float = FD_STEP) -> "BasisField":
        """Wrap a value-only field; derivatives come from central differences.

        Expect Jacobians accurate to roughly ``step**2`` and Laplacians to
        roughly ``1e-16 / step**2``, well below the analytic fields.
        """
        return cls(name, value, _fd_jacobian(value, step), _fd_laplacian(value, step))


def _fd_jacobian(value, h):
    def jac(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dx = (value(x + h, y) - value(x - h, y)) / (2 * h)
        dy = (value(x, y + h) - value(x, y - h)) / (2 * h)
        return np.stack([dx, dy], axis=1)

    return jac


def _fd_laplacian(value, h):
    h = max(h, 1e-4)

    def lap(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        c = value(x, y)
        return (
            value(x + h, y) + value(x - h, y) + value(x, y + h) + value(x, y - h) - 4 * c
        ) / (h * h)

    return lap


def _embed(component, psi):
    def f(x, y):
        s = np.asarray(psi(x, y), dtype=float)
        s = np.broadcast_to(s, np.broadcast_shapes(np.shape(x), np.shape(y)))
        out = np.zeros((2,) + s.shape)
        out[component] = s
        return out

    return f


def _embed_grad(component, dpsi_dx, dpsi_dy):
    def f(x, y):
        gx = np.asarray(dpsi_dx(x, y), dtype=float)
        gy = np.asarray(dpsi_dy(x, y), dtype=float)
        shape = np.broadcast_shapes(np.shape(x), np.shape(y))
        out = np.zeros((2, 2) + shape)
        out[component, 0] = gx
        out[component, 1] = gy
        return out

    return f


def scalar_field(
    component: str,
    kind: str,
    freq_x: float = 0.0,
    freq_y: float = 0.0,
    phase: float = 0.0,
    name: str | None = None,
) -> BasisField:
    """Build ``psi(x, y) e_c`` with analytic derivatives.

    ``kind`` is one of ``const``, ``coord_x``, ``coord_y``, ``sin``, ``cos``;
    the trigonometric kinds use ``psi = sin(freq_x x + freq_y y + phase)``.
    """
    if component not in _COMPONENTS:
        raise ConfigError(f"component must be 'e1' or 'e2', got {component!r}")
    c = _COMPONENTS[component]
    a, b, ph = float(freq_x), float(freq_y), float(phase)
    zero = lambda x, y: 0.0  # noqa: E731
    one = lambda x, y: 1.0  # noqa: E731

    if kind == "const":
        psi, px, py, lam, label = one, zero, zero, 0.0, "1"
    elif kind == "coord_x":
        psi, px, py, lam, label = (lambda x, y: x), one, zero, 0.0, "x"
    elif kind == "coord_y":
        psi, px, py, lam, label = (lambda x, y: y), zero, one, 0.0, "y"
    elif kind in ("sin", "cos"):
        if kind == "sin":
            f, g, sgn = np.sin, np.cos, 1.0
        else:
            f, g, sgn = np.cos, np.sin, -1.0
        psi = lambda x, y: f(a * x + b * y + ph)  # noqa: E731
        px = lambda x, y: sgn * a * g(a * x + b * y + ph)  # noqa: E731
        py = lambda x, y: sgn * b * g(a * x + b * y + ph)  # noqa: E731
        lam = a * a + b * b
        label = f"{kind}({_fmt_arg(a, b, ph)})"
    else:
        raise ConfigError(f"unknown field kind {kind!r}")

    value = _embed(c, psi)
    lap = (lambda x, y: -lam * value(x, y)) if lam else _embed(c, zero)
    return BasisField(
        name or f"{label} {component}",
        value,
        _embed_grad(c, px, py),
        lap,
        lam,
    )


def _fmt_arg(a, b, ph):
    parts = []
    for coef, sym in ((a, "x"), (b, "y")):
        if coef == 1:
            parts.append(sym)
        elif coef:
            parts.append(f"{coef:g}{sym}")
    if ph:
        parts.append(f"{ph:g}")
    return "+".join(parts) or "0"


@dataclass(frozen=True)
class MetricOperator:
    """``L = (1 - alpha Laplacian)^k`` acting componentwise."""

    alpha: float = 1.0
    k: int = 1

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidInputError(f"alpha must be positive, got {self.alpha}")
        if int(self.k) != self.k or self.k < 0:
            raise InvalidInputError(f"k must be a nonnegative integer, got {self.k}")

    def apply(self, X: BasisField) -> BasisField:
        if self.k == 0:
            return X
        if X.eigenvalue is not None:
            s = (1.0 + self.alpha * X.eigenvalue) ** self.k
            return X.scaled(s, name=f"L({X.name})")
        if self.k > 1:
            raise UnsupportedError(
                f"L with k={self.k} needs an analytic eigenvalue; field {X.name!r} has none"
            )
        alpha = self.alpha

        def value(x, y):
            return X.value(x, y) - alpha * X.laplacian(x, y)

        return BasisField.from_function(f"L({X.name})", value)


class FieldFamily:
    """Basis fields together with the metric, quadrature grid and Gram matrix.

    The Gram matrix ``A[i, j] = int L X^i . X^j`` is symmetrised and cached at
    construction, together with the basis fields sampled on the grid.
    """

    def __init__(
        self,
        basis: Sequence[BasisField],
        metric: MetricOperator | None = None,
        grid: QuadratureGrid | None = None,
        drift: BasisField | None = None,
        family_id: str = "custom",
    ):
        if len(basis) == 0:
            raise InvalidInputError("a field family needs at least one basis field")
        self.basis = tuple(basis)
        self.metric = metric or MetricOperator()
        self.grid = grid or QuadratureGrid()
        self.drift = drift
        self.family_id = family_id
        self.l = len(self.basis)
        self.L_basis = tuple(self.metric.apply(X) for X in self.basis)

        X, Y = self.grid.nodes
        x, y = X.ravel(), Y.ravel()
        self._w = np.outer(self.grid.weights_1d, self.grid.weights_1d).ravel()
        self._vals = np.stack([f.value(x, y) for f in self.basis])
        self._jac = np.stack([f.jacobian(x, y) for f in self.basis])
        self._Lvals = np.stack([f.value(x, y) for f in self.L_basis])
        self._Ljac = np.stack([f.jacobian(x, y) for f in self.L_basis])

        raw = np.einsum("icn,jcn,n->ij", self._Lvals, self._vals, self._w)
        self.a_matrix_raw = raw
        a = 0.5 * (raw + raw.T)
        a.setflags(write=False)
        self.a_matrix = a

        eig = np.linalg.eigvalsh(a)
        self.a_min_eig = float(eig[0])
        self.a_condition = float(eig[-1] / eig[0]) if eig[0] > 0 else math.inf
        self.positive_definite = bool(eig[0] > 0 and self.a_condition <= COND_LIMIT)

    def __repr__(self):
        names = ", ".join(f.name for f in self.basis)
        return f"FieldFamily({self.family_id!r}, l={self.l}, [{names}])"

    def require_dynamics(self):
        if self.drift is not None:
            raise UnsupportedError("control dynamics are only derived for drift-free families")
        if not self.positive_definite:
            raise SingularFamilyError(
                f"Gram matrix unusable for dynamics: min eigenvalue {self.a_min_eig:.3e}, "
                f"condition {self.a_condition:.3e} (limit {COND_LIMIT:.0e})"
            )

    @cached_property
    def a_cholesky(self):
        self.require_dynamics()
        return scipy.linalg.cho_factor(self.a_matrix)

    def solve_a(self, b):
        return scipy.linalg.cho_solve(self.a_cholesky, b)

    @cached_property
    def momentum_tensor(self) -> np.ndarray:
        """``T[i, j, k]`` with ``b_i(u) = sum_jk T[i, j, k] u_j u_k``.

        Built by quadrature from
        ``X^i . [(D X^j)^T L X^k + (D L X^k) X^j + L X^k div X^j]``.
        """
        self.require_dynamics()
        T = np.empty((self.l, self.l, self.l))
        Lv, Lj = self._Lvals, self._Ljac
        for j in range(self.l):
            Xj, DXj = self._vals[j], self._jac[j]
            div = DXj[0, 0] + DXj[1, 1]
            force = (
                np.einsum("acn,kan->kcn", DXj, Lv)
                + np.einsum("kcan,an->kcn", Lj, Xj)
                + Lv * div
            )
            T[:, j, :] = np.einsum("icn,kcn,n->ik", self._vals, force, self._w)
        T.setflags(write=False)
        return T

    @cached_property
    def velocity_tensor(self) -> np.ndarray:
        """``G`` with ``du/dt = sum_jk G[i, j, k] u_j u_k``, i.e. ``A^{-1} T``."""
        T = self.momentum_tensor
        G = self.solve_a(T.reshape(self.l, -1)).reshape(T.shape)
        G.setflags(write=False)
        return G

    def fields_at(self, points):
        """Basis values ``(l, 2, m)`` and Jacobians ``(l, 2, 2, m)`` at ``(m, 2)`` points."""
        x, y = points[:, 0], points[:, 1]
        vals = np.stack([f.value(x, y) for f in self.basis])
        jacs = np.stack([f.jacobian(x, y) for f in self.basis])
        return vals, jacs


def _check_u(fam, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (fam.l,):
        raise DimensionError(f"control has shape {u.shape}, family expects ({fam.l},)")
    return u


def eval_field(fam: FieldFamily, u, p):
    """Evaluate ``F(u)`` at a point (returns a TangentVector) or an ``(m, 2)`` array."""
    u = _check_u(fam, u)
    pts = np.atleast_2d(np.asarray(p, dtype=float))
    vals, _ = fam.fields_at(pts)
    v = np.einsum("i,icm->mc", u, vals)
    if fam.drift is not None:
        v = v + fam.drift.at(pts)
    if isinstance(p, TorusPoint) or np.ndim(p) == 1:
        return TangentVector(float(v[0, 0]), float(v[0, 1]))
    return v


def apply_L(fam: FieldFamily, X: BasisField) -> BasisField:
    return fam.metric.apply(X)


def compute_a_matrix(fam: FieldFamily) -> np.ndarray:
    return fam.a_matrix


def field_inner_product(fam: FieldFamily, u, w) -> float:
    if fam.drift is not None:
        raise UnsupportedError("inner product of F(u) is defined here only for drift-free families")
    u = _check_u(fam, u)
    w = _check_u(fam, w)
    return float(u @ fam.a_matrix @ w)


def lie_bracket(X: BasisField, Y: BasisField, p):
    """``[X, Y](p) = DY(p) X(p) - DX(p) Y(p)``."""
    single = isinstance(p, TorusPoint) or np.ndim(p) == 1
    pts = np.atleast_2d(np.asarray(p, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    out = _bracket_value(X, Y)(x, y)
    if single:
        return TangentVector(float(out[0, 0]), float(out[1, 0]))
    return out.T


def _bracket_value(X, Y):
    def value(x, y):
        return np.einsum("ca...,a...->c...", Y.jacobian(x, y), X.value(x, y)) - np.einsum(
            "ca...,a...->c...", X.jacobian(x, y), Y.value(x, y)
        )

    return value


def bracket_field(X: BasisField, Y: BasisField) -> BasisField:
    """``[X, Y]`` as a field.  Its own derivatives are finite-difference based."""
    value = _bracket_value(X, Y)
    return BasisField(
        f"[{X.name}, {Y.name}]",
        value,
        _fd_jacobian(value, FD_STEP),
        _fd_laplacian(value, FD_STEP),
    )


@dataclass
class BracketProbe:
    """Outcome of :func:`bracket_rank_probe`.

    ``pointwise_rank[s]`` is the rank of all collected field values at sample
    ``s`` (at most 2).  ``span_rank[d]`` is the dimension of the span of the
    basis plus brackets up to depth ``d``, with fields compared as vectors of
    their values at all samples; ``span_rank[0]`` is the basis alone.
    """

    pointwise_rank: np.ndarray
    span_rank: list
    fields: list

    @property
    def closed(self) -> bool:
        """True when no bracket left the span of the basis."""
        return self.span_rank[-1] == self.span_rank[0]


def _rank(mat, tol=RANK_TOL):
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def bracket_rank_probe(fam: FieldFamily, depth: int, samples) -> BracketProbe:
    """Probe how far iterated Lie brackets of the basis reach.

    Brackets ``[X^i, Z]`` are formed for every basis field ``X^i`` and every
    field ``Z`` kept at the previous depth.  A bracket is kept only if it
    raises the rank of the sampled span, so the work stays bounded.
    """
    if depth < 1:
        raise InvalidInputError("depth must be at least 1")
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    x, y = pts[:, 0], pts[:, 1]

    def sampled(f):
        return f.value(x, y).ravel()

    kept = list(fam.basis)
    rows = [sampled(f) for f in kept]
    span_rank = [_rank(np.array(rows))]
    frontier = list(kept)
    for _ in range(depth):
        new_frontier = []
        for Z in frontier:
            for Xi in fam.basis:
                B = bracket_field(Xi, Z)
                vec = sampled(B)
                trial = np.array(rows + [vec])
                if _rank(trial) > _rank(np.array(rows)):
                    rows.append(vec)
                    kept.append(B)
                    new_frontier.append(B)
        span_rank.append(_rank(np.array(rows)))
        frontier = new_frontier
        if not frontier:
            # nothing new: deeper brackets stay in the span
            span_rank.extend([span_rank[-1]] * (depth + 1 - len(span_rank)))
            break

    pointwise = np.empty(len(pts), dtype=int)
    stack = np.stack([f.value(x, y) for f in kept])  # (F, 2, S)
    for s in range(len(pts)):
        pointwise[s] = _rank(stack[:, :, s])
    return BracketProbe(pointwise, span_rank, [f.name for f in kept])


# built-in families


def constant_family(metric=None, grid=None) -> FieldFamily:
    basis = [scalar_field("e1", "const"), scalar_field("e2", "const")]
    return FieldFamily(basis, metric, grid, family_id="constant")


def linear_family(metric=None, grid=None) -> FieldFamily:
    # the fourth field is read as x e2 (printed as "x e_4")
    basis = [
        scalar_field("e1", "const"),
        scalar_field("e1", "coord_x"),
        scalar_field("e2", "const"),
        scalar_field("e2", "coord_x"),
    ]
    return FieldFamily(basis, metric, grid, family_id="linear")


def trig_family(metric=None, grid=None) -> FieldFamily:
    basis = [
        scalar_field("e1", "sin", freq_x=1.0),
        scalar_field("e1", "sin", freq_y=0.5),
        scalar_field("e2", "sin", freq_x=0.5),
        scalar_field("e2", "sin", freq_y=0.25),
    ]
    return FieldFamily(basis, metric, grid, family_id="trig")


def fourier10_family(metric=None, grid=None) -> FieldFamily:
    """``psi e_c`` for ``psi`` in (1, cos x, sin x, cos y, sin y), e1 block first."""
    basis = []
    for comp in ("e1", "e2"):
        basis += [
            scalar_field(comp, "const"),
            scalar_field(comp, "cos", freq_x=1.0),
            scalar_field(comp, "sin", freq_x=1.0),
            scalar_field(comp, "cos", freq_y=1.0),
            scalar_field(comp, "sin", freq_y=1.0),
        ]
    return FieldFamily(basis, metric, grid, family_id="fourier10")


BUILTIN_FAMILIES = {
    "constant": constant_family,
    "linear": linear_family,
    "trig": trig_family,
    "fourier10": fourier10_family,
}

_CONFIG_KEYS = {"family", "alpha", "k", "grid_n", "grid_rule", "custom_fields"}
_FIELD_KEYS = {"component", "kind", "freq_x", "freq_y", "phase"}


def family_from_config(cfg: dict) -> FieldFamily:
    """Build a family from the JSON configuration block.

    Unknown keys are rejected.  ``custom_fields`` is required exactly when
    ``family == "custom"``.
    """
    unknown = set(cfg) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown family keys: {sorted(unknown)}")
    kind = cfg.get("family")
    metric = MetricOperator(float(cfg.get("alpha", 1.0)), int(cfg.get("k", 1)))
    grid = QuadratureGrid(int(cfg.get("grid_n", 128)), cfg.get("grid_rule", "gauss"))
    if kind in BUILTIN_FAMILIES:
        if "custom_fields" in cfg:
            raise ConfigError("custom_fields is only valid with family 'custom'")
        return BUILTIN_FAMILIES[kind](metric, grid)
    if kind != "custom":
        raise ConfigError(f"unknown family {kind!r}")
    specs = cfg.get("custom_fields")
    if not specs:
        raise ConfigError("family 'custom' needs a non-empty custom_fields list")
    basis = []
    for n, spec in enumerate(specs):
        bad = set(spec) - _FIELD_KEYS
        if bad:
            raise ConfigError(f"custom_fields[{n}]: unknown keys {sorted(bad)}")
        try:
            basis.append(
                scalar_field(
                    spec["component"],
                    spec["kind"],
                    spec.get("freq_x", 0.0),
                    spec.get("freq_y", 0.0),
                    spec.get("phase", 0.0),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"custom_fields[{n}]: missing {exc.args[0]!r}") from None
    return FieldFamily(basis, metric, grid, family_id="custom")
