"""Convex domains and Dirichlet data for the graphical flow."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParameterError, InvalidPointError


@dataclass(frozen=True)
class Rectangle:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or any(h <= l for l, h in zip(lo, hi)):
            raise InvalidParameterError("rectangle needs lo < hi in every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def n(self):
        return len(self.lo)

    @property
    def anchor(self):
        return np.array(self.lo)

    @property
    def diameter(self):
        return float(np.linalg.norm(np.subtract(self.hi, self.lo)))

    def bbox(self):
        return np.array(self.lo), np.array(self.hi)

    def level(self, x):
        x = np.asarray(x, float)
        return np.max(np.maximum(self.anchor - x, x - np.array(self.hi)), axis=-1)

    def crossing(self, x, axis, sign):
        return (self.hi[axis] - x[axis]) if sign > 0 else (x[axis] - self.lo[axis])

    def outward_normal(self, p):
        p = np.asarray(p, float)
        gaps = np.concatenate([p - self.anchor, np.array(self.hi) - p])
        j = int(np.argmin(np.abs(gaps)))
        nu = np.zeros(self.n)
        nu[j % self.n] = -1.0 if j < self.n else 1.0
        return nu

    def boundary_gap(self, p):
        p = np.asarray(p, float)
        inside = np.all((p >= self.anchor - 1e-12) & (p <= np.array(self.hi) + 1e-12))
        gap = np.min(np.abs(np.concatenate([p - self.anchor, np.array(self.hi) - p])))
        return gap if inside else math.inf

    def extreme_points(self):
        return np.stack(np.meshgrid(*zip(self.lo, self.hi), indexing="ij"), -1).reshape(-1, self.n)


@dataclass(frozen=True)
class Ellipse:
    center: tuple
    semi_axes: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.center))
        a = tuple(float(v) for v in np.atleast_1d(self.semi_axes))
        if len(c) != len(a) or any(v <= 0 for v in a):
            raise InvalidParameterError("ellipse needs positive semi-axes matching the center")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "semi_axes", a)

    @property
    def n(self):
        return len(self.center)

    @property
    def anchor(self):
        return np.array(self.center)

    @property
    def diameter(self):
        return 2.0 * max(self.semi_axes)

    def bbox(self):
        c, a = np.array(self.center), np.array(self.semi_axes)
        return c - a, c + a

    def _q(self, x):
        y = (np.asarray(x, float) - self.anchor) / np.array(self.semi_axes)
        return np.sum(y * y, axis=-1)

    def level(self, x):
        return self._q(x) - 1.0

    def crossing(self, x, axis, sign):
        a = np.array(self.semi_axes)
        y = (np.asarray(x, float) - self.anchor) / a
        rest = float(np.sum(y * y) - y[axis] ** 2)
        return a[axis] * math.sqrt(max(1.0 - rest, 0.0)) - sign * (x[axis] - self.center[axis])

    def outward_normal(self, p):
        g = (np.asarray(p, float) - self.anchor) / np.array(self.semi_axes) ** 2
        return g / np.linalg.norm(g)

    def boundary_gap(self, p):
        return abs(math.sqrt(self._q(p)) - 1.0) * min(self.semi_axes)

    def boundary_samples(self, m=4096):
        if self.n == 1:
            return np.array([[self.center[0] - self.semi_axes[0]], [self.center[0] + self.semi_axes[0]]])
        if self.n != 2:
            raise InvalidParameterError("boundary sampling implemented for n <= 2")
        t = np.linspace(0, 2 * math.pi, m, endpoint=False)
        return self.anchor + np.stack([np.cos(t), np.sin(t)], -1) * np.array(self.semi_axes)


class Disc(Ellipse):
    def __init__(self, center, radius):
        c = tuple(float(v) for v in np.atleast_1d(center))
        super().__init__(center=c, semi_axes=(float(radius),) * len(c))

    @property
    def radius(self):
        return self.semi_axes[0]

    def __repr__(self):
        return f"Disc(center={self.center}, radius={self.radius})"


@dataclass(frozen=True)
class DomainSpec:
    """Bounded convex domain; ``diameter`` is ``D = diam(Omega)``."""

    shape: Rectangle | Ellipse
    diameter: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "diameter", self.shape.diameter)

    @property
    def n(self) -> int:
        return self.shape.n

    @property
    def kind(self) -> str:
        return type(self.shape).__name__.lower()

    def inside(self, x, tol=None):
        tol = 1e-12 * self.diameter if tol is None else tol
        return self.shape.level(x) < -tol

    def outward_normal(self, p):
        self.require_boundary_point(p)
        return self.shape.outward_normal(p)

    def require_boundary_point(self, p, tol=1e-9):
        p = np.asarray(p, float)
        if p.shape != (self.n,) or self.shape.boundary_gap(p) > tol * max(1.0, self.diameter):
            raise InvalidPointError(f"{p.tolist()} is not on the boundary of {self.shape}")
        return p

    def default_boundary_point(self):
        """Boundary point on the positive first axis through the anchor/center."""
        if isinstance(self.shape, Rectangle):
            lo, hi = self.shape.bbox()
            p = 0.5 * (lo + hi)
            p[0] = hi[0]
            return p
        p = self.shape.anchor.copy()
        p[0] += self.shape.semi_axes[0]
        return p


def rectangle(lo, hi) -> DomainSpec:
    return DomainSpec(Rectangle(lo, hi))


def disc(center, radius) -> DomainSpec:
    return DomainSpec(Disc(center, radius))


def ellipse(center, semi_axes) -> DomainSpec:
    return DomainSpec(Ellipse(center, semi_axes))


def interval(a, b) -> DomainSpec:
    return DomainSpec(Rectangle([a], [b]))


# ---------------------------------------------------------------------------
# boundary data


@dataclass(frozen=True)
class BoundaryData:
    """Quadratic Dirichlet data ``psi^a(x) = b^a + A[:, a].x + x.Q[a].x / 2``.

    ``zero`` and ``affine`` are special cases.  Shapes: ``b (k,)``,
    ``A (n, k)``, ``Q (k, n, n)``.  ``sup_D2psi`` is the Frobenius norm of the
    Hessian tensor, which dominates every pointwise matrix norm.
    """

    b: np.ndarray
    A: np.ndarray
    Q: np.ndarray
    kind: str = "quadratic"

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b, float))
        k = b.shape[0]
        A = np.asarray(self.A, float)
        if A.ndim == 1:
            A = A[:, None]
        n = A.shape[0]
        Q = np.asarray(self.Q, float)
        if Q.ndim == 2:
            Q = Q[None]
        if A.shape != (n, k) or Q.shape != (k, n, n):
            raise InvalidParameterError(f"psi shapes b{b.shape} A{A.shape} Q{Q.shape} inconsistent")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(A)) and np.all(np.isfinite(Q))):
            raise InvalidParameterError("psi coefficients must be finite")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Q", 0.5 * (Q + np.swapaxes(Q, 1, 2)))

    @classmethod
    def zero(cls, n=1, k=1):
        return cls(np.zeros(k), np.zeros((n, k)), np.zeros((k, n, n)), kind="zero")

    @classmethod
    def affine(cls, A, b=None):
        A = np.asarray(A, float)
        if A.ndim == 1:
            A = A[:, None]
        n, k = A.shape
        b = np.zeros(k) if b is None else b
        return cls(b, A, np.zeros((k, n, n)), kind="affine")

    @classmethod
    def quadratic(cls, Q, A=None, b=None):
        Q = np.asarray(Q, float)
        if Q.ndim == 2:
            Q = Q[None]
        k, n, _ = Q.shape
        A = np.zeros((n, k)) if A is None else A
        b = np.zeros(k) if b is None else b
        return cls(b, A, Q, kind="quadratic")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def k(self):
        return self.b.shape[0]

    def value(self, x):
        x = np.asarray(x, float)
        return self.b + x @ self.A + 0.5 * np.einsum("...i,aij,...j->...a", x, self.Q, x)

    def gradient(self, x):
        """``D psi`` with shape ``(..., n, k)``."""
        x = np.asarray(x, float)
        return self.A + np.einsum("aij,...j->...ia", self.Q, x)

    def hessian(self, x=None):
        return np.transpose(self.Q, (1, 2, 0))

    @property
    def sup_D2psi(self) -> float:
        return float(np.linalg.norm(self.Q))

    def sup_abs(self, spec: DomainSpec, extra_points=None):
        """Per-component ``sup |psi^a|`` over a dense sample of the closure.

        ``extra_points`` (e.g. the solver nodes) are included so the value
        always dominates what the discrete solution sees.
        """
        pts = _dense_closure(spec)
        if extra_points is not None:
            pts = np.vstack([pts, np.asarray(extra_points, float).reshape(-1, spec.n)])
        return np.abs(self.value(pts)).max(axis=0)

    def sup_Dpsi_boundary(self, spec: DomainSpec) -> float:
        """``sup_{boundary} |D psi|`` (Frobenius).

        ``|D psi|`` is convex in ``x``, so on a box the supremum is attained at
        a vertex; on an ellipse a dense boundary sample is padded by the
        Lipschitz constant times the sample gap.
        """
        if self.kind == "zero":
            return 0.0
        shape = spec.shape
        if isinstance(shape, Rectangle):
            pts = shape.extreme_points()
            return float(np.linalg.norm(self.gradient(pts), axis=(-2, -1)).max())
        pts = shape.boundary_samples(4096)
        gap = 2 * math.pi * max(shape.semi_axes) / 4096
        vals = np.linalg.norm(self.gradient(pts), axis=(-2, -1))
        return float(vals.max() + self.sup_D2psi * gap)


def _dense_closure(spec: DomainSpec, m=257):
    lo, hi = spec.shape.bbox()
    axes = [np.linspace(l, h, m if spec.n <= 2 else 33) for l, h in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, spec.n)
    keep = spec.shape.level(pts) <= 1e-12
    return pts[keep]
