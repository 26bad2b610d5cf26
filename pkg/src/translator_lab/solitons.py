"""Analytic translating solitons and the sampled scans run on them.

All models translate in the direction ``W = e_{N}`` (last ambient axis) and
are stored in the orientation where ``g^ij u_ij = -1``, i.e. as fixed points
of ``f_t = g^ij f_ij + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import geometry as geo
from .errors import (
    AccuracyError,
    DomainError,
    InvalidParameterError,
    InvalidWindowError,
    VerificationFailure,
)

HALF_PI = 0.5 * math.pi


# ---------------------------------------------------------------------------
# parameter windows


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise InvalidWindowError("box bounds have different dimensions")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def is_empty(self) -> bool:
        return any(h <= l for l, h in zip(self.lo, self.hi))

    def within(self, other) -> bool:
        if isinstance(other, Box):
            return all(ol <= l + 1e-12 and h <= oh + 1e-12
                       for l, h, ol, oh in zip(self.lo, self.hi, other.lo, other.hi))
        corners = np.stack(np.meshgrid(*zip(self.lo, self.hi), indexing="ij"), -1)
        return bool(np.all(np.linalg.norm(corners - other.center_array, axis=-1)
                           <= other.radius + 1e-12))

    def axes(self, num):
        return [np.linspace(l, h, num) for l, h in zip(self.lo, self.hi)]

    def sample(self, num: int):
        """Tensor grid with ``num`` nodes per axis and its face mask."""
        axes = self.axes(num)
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        idx = np.stack(np.meshgrid(*[np.arange(num)] * self.dim, indexing="ij"), -1)
        idx = idx.reshape(-1, self.dim)
        boundary = np.any((idx == 0) | (idx == num - 1), axis=-1)
        return pts, boundary


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def center_array(self):
        return np.array(self.center)

    def is_empty(self) -> bool:
        return self.radius <= 0

    def within(self, other) -> bool:
        c = self.center_array
        if isinstance(other, Ball):
            return np.linalg.norm(c - other.center_array) + self.radius <= other.radius + 1e-12
        return all(l <= ci - self.radius + 1e-12 and ci + self.radius <= h + 1e-12
                   for ci, l, h in zip(c, other.lo, other.hi))

    def sample(self, num: int):
        """Polar rings in 2D, an interval in 1D, a masked cube otherwise."""
        c, R = self.center_array, self.radius
        if self.dim == 1:
            pts = np.linspace(c[0] - R, c[0] + R, num)[:, None]
            boundary = np.zeros(num, bool)
            boundary[[0, -1]] = True
            return pts, boundary
        if self.dim == 2:
            radii = np.linspace(0.0, R, num)[1:]
            n_theta = 4 * num
            theta = np.linspace(0.0, 2 * math.pi, n_theta, endpoint=False)
            rr, tt = np.meshgrid(radii, theta, indexing="ij")
            ring = np.stack([rr * np.cos(tt), rr * np.sin(tt)], -1).reshape(-1, 2)
            pts = np.vstack([np.zeros((1, 2)), ring]) + c
            boundary = np.zeros(len(pts), bool)
            boundary[-n_theta:] = True
            return pts, boundary
        box = Box(c - R, c + R)
        grid = np.stack(np.meshgrid(*box.axes(num), indexing="ij"), -1)
        inside = np.linalg.norm(grid - c, axis=-1) <= R
        # a node is interior when all its lattice neighbours are inside too
        interior = inside.copy()
        pad = np.pad(inside, 1, constant_values=False)
        for ax in range(self.dim):
            for s in (0, 2):
                sl = [slice(1, -1)] * self.dim
                sl[ax] = slice(s, s + inside.shape[ax])
                interior &= pad[tuple(sl)]
        boundary = inside & ~interior
        return grid[inside], boundary[inside]


Window = Box | Ball


# ---------------------------------------------------------------------------
# closed-form jets


def grim_reaper_jet(x) -> geo.GraphJet:
    """Jet of ``u = log cos x`` (dome up); requires ``|x| < pi/2 - 1e-9``."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= HALF_PI - 1e-9):
        raise DomainError("grim reaper is defined for |x| < pi/2")
    c = np.cos(x)
    base = x[..., None]
    return geo.GraphJet(
        base_point=base,
        value=np.log(c)[..., None],
        d1=(-np.tan(x))[..., None, None],
        d2=(-1.0 / c**2)[..., None, None, None],
    )


def tilted_grim_reaper_jet(theta, x, y) -> geo.GraphJet:
    """Jet of ``u = sec^2(theta) log cos(x cos theta) - y tan theta``."""
    if not 0.0 <= theta < HALF_PI:
        raise DomainError("theta must lie in [0, pi/2)")
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    c = math.cos(theta)
    xc = x * c
    if np.any(np.abs(xc) >= HALF_PI - 1e-9):
        raise DomainError("tilted grim reaper needs |x cos theta| < pi/2")
    t = math.tan(theta)
    u = np.log(np.cos(xc)) / c**2 - y * t
    d1 = np.stack([-np.tan(xc) / c, np.full_like(x, -t)], axis=-1)
    d2 = np.zeros(x.shape + (2, 2))
    d2[..., 0, 0] = -1.0 / np.cos(xc) ** 2
    return geo.GraphJet(
        base_point=np.stack([x, y], axis=-1),
        value=u[..., None],
        d1=d1[..., None],
        d2=d2[..., None],
    )


# ---------------------------------------------------------------------------
# bowl profile


def _bowl_series(n):
    a = -1.0 / (2 * n)
    b = -1.0 / (4.0 * n**3 * (n + 2))
    return a, b


def _bowl_rhs(n, r, p):
    return -(1.0 + p * p) * (1.0 + (n - 1) * p / r)


@dataclass(frozen=True)
class BowlProfile:
    """Tabulated radial profile ``u(r)`` of the bowl translator in ``R^{n+1}``."""

    n: int
    radii: np.ndarray
    u: np.ndarray
    du: np.ndarray
    d2u: np.ndarray
    r_series: float
    _u_spline: CubicHermiteSpline = field(init=False, repr=False, compare=False)
    _du_spline: CubicHermiteSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("radii", "u", "du", "d2u"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "_u_spline", CubicHermiteSpline(self.radii, self.u, self.du))
        object.__setattr__(self, "_du_spline", CubicHermiteSpline(self.radii, self.du, self.d2u))

    @property
    def R_max(self) -> float:
        return float(self.radii[-1])

    @property
    def step(self) -> float:
        return float(self.radii[1] - self.radii[0])

    def evaluate(self, r):
        """Return ``(u, u', u'', u'/r)`` at radii ``r`` in ``[0, R_max]``.

        Between nodes ``u`` and ``u'`` are cubic Hermite interpolants and
        ``u''`` is taken from the ODE so the jet is exactly a rotational
        fixed point.  Inside ``r_series`` the series expansion is used.
        """
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.R_max * (1 + 1e-12)):
            raise DomainError(f"bowl profile covers r in [0, {self.R_max}]")
        a, b = _bowl_series(self.n)
        small = r <= self.r_series
        rs = np.where(small, r, 0.0)
        rl = np.where(small, self.r_series, r)
        u = np.where(small, a * rs**2 + b * rs**4, self._u_spline(rl))
        du = np.where(small, 2 * a * rs + 4 * b * rs**3, self._du_spline(rl))
        ratio = np.where(small, 2 * a + 4 * b * rs**2, du / rl)
        d2u = np.where(small, 2 * a + 12 * b * rs**2, -(1 + du**2) * (1 + (self.n - 1) * ratio))
        return u, du, d2u, ratio

    def ode_residual(self):
        """``u''/(1+u'^2) + (n-1)u'/r + 1`` on nodes ``r >= r_series``.

        ``u''`` comes from a fourth-order finite difference of the tabulated
        ``u'`` rather than from the stored ``d2u``, so the residual measures
        the integration error instead of restating the ODE.
        """
        h = self.step
        du = self.du
        d2 = np.empty_like(du)
        d2[2:-2] = (du[:-4] - 8 * du[1:-3] + 8 * du[3:-1] - du[4:]) / (12 * h)
        for i in (0, 1):
            s = du[i:i + 5]
            d2[i] = (-25 * s[0] + 48 * s[1] - 36 * s[2] + 16 * s[3] - 3 * s[4]) / (12 * h)
        for i in (-1, -2):
            j = len(du) + i
            s = du[j - 4:j + 1]
            d2[i] = (25 * s[4] - 48 * s[3] + 36 * s[2] - 16 * s[1] + 3 * s[0]) / (12 * h)
        mask = self.radii >= self.r_series - 1e-15
        r = self.radii[mask]
        p = du[mask]
        return r, d2[mask] / (1 + p**2) + (self.n - 1) * p / r + 1.0


def bowl_profile(n: int, R_max: float = 10.0, step: float = 1e-3) -> BowlProfile:
    """Integrate ``u'' = -(1+u'^2)(1+(n-1)u'/r)`` with classical RK4.

    The start ``r_series = 10 step`` is seeded from
    ``u = -r^2/(2n) - r^4/(4 n^3 (n+2))``.
    """
    if int(n) != n or n < 2:
        raise InvalidParameterError("bowl needs dimension n >= 2")
    n = int(n)
    if step <= 0 or R_max <= 0:
        raise InvalidParameterError("R_max and step must be positive")
    if step > 1e-3 * R_max * (1 + 1e-12):
        raise AccuracyError(f"step {step} exceeds 1e-3 * R_max = {1e-3 * R_max}")
    m = int(round(R_max / step))
    radii = step * np.arange(m + 1)
    i_s = 10
    r_s = radii[i_s]
    a, b = _bowl_series(n)
    u = np.empty(m + 1)
    p = np.empty(m + 1)
    rs = radii[: i_s + 1]
    u[: i_s + 1] = a * rs**2 + b * rs**4
    p[: i_s + 1] = 2 * a * rs + 4 * b * rs**3
    uu, pp = u[i_s], p[i_s]
    for i in range(i_s, m):
        r = radii[i]
        k1u, k1p = pp, _bowl_rhs(n, r, pp)
        p2 = pp + 0.5 * step * k1p
        k2u, k2p = p2, _bowl_rhs(n, r + 0.5 * step, p2)
        p3 = pp + 0.5 * step * k2p
        k3u, k3p = p3, _bowl_rhs(n, r + 0.5 * step, p3)
        p4 = pp + step * k3p
        k4u, k4p = p4, _bowl_rhs(n, r + step, p4)
        uu += step * (k1u + 2 * k2u + 2 * k3u + k4u) / 6
        pp += step * (k1p + 2 * k2p + 2 * k3p + k4p) / 6
        u[i + 1], p[i + 1] = uu, pp
    d2u = np.empty(m + 1)
    d2u[0] = 2 * a
    d2u[1:] = _bowl_rhs(n, radii[1:], p[1:])
    return BowlProfile(n=n, radii=radii, u=u, du=p, d2u=d2u, r_series=float(r_s))


def bowl_jet(profile: BowlProfile, points) -> geo.GraphJet:
    x = np.asarray(points, dtype=float)
    n = profile.n
    if x.shape[-1] != n:
        raise InvalidParameterError(f"bowl points must have {n} coordinates")
    r = np.linalg.norm(x, axis=-1)
    u, du, d2u, ratio = profile.evaluate(r)
    safe = np.where(r > 0, r, 1.0)
    xhat = np.where((r > 0)[..., None], x / safe[..., None], 0.0)
    d1 = ratio[..., None] * x
    outer = xhat[..., :, None] * xhat[..., None, :]
    d2 = (d2u - ratio)[..., None, None] * outer + ratio[..., None, None] * np.eye(n)
    return geo.GraphJet(base_point=x, value=u[..., None], d1=d1[..., None], d2=d2[..., None])


# ---------------------------------------------------------------------------
# models


class SolitonModel:
    """Common interface; subclasses provide ``jet`` and domain geometry."""

    kind = "abstract"
    n: int = 1
    tolerance = 1e-8

    @property
    def ambient_dim(self) -> int:
        return self.n + 1

    @property
    def W(self):
        return np.eye(self.ambient_dim)[-1]

    def jet(self, points):
        raise NotImplementedError

    def contains(self, points):
        raise NotImplementedError

    def verification_window(self) -> Window:
        raise NotImplementedError

    def ball_box(self, R: float) -> Box:
        """Parameter box whose image contains ``B_R(0) intersected with M``."""
        raise NotImplementedError

    def position(self, points):
        return geo.as_immersion(self.jet(points)).position

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"


class Hyperplane(SolitonModel):
    """Hyperplane through the origin with unit normal ``normal``.

    The last parameter runs along the component of ``W`` inside the plane,
    so when ``normal`` is orthogonal to ``W`` the function S is literally the
    last parameter.  A normal with a component along ``W`` gives a minimal
    but non-translating hyperplane.
    """

    kind = "hyperplane"

    def __init__(self, n: int = 1, normal=None):
        self.n = int(n)
        N = self.n + 1
        nu = np.eye(N)[0] if normal is None else np.asarray(normal, dtype=float)
        if nu.shape != (N,):
            raise InvalidParameterError(f"normal must have {N} components")
        nu = nu / np.linalg.norm(nu)
        w_in = self.W - (self.W @ nu) * nu
        seeds = [w_in] if np.linalg.norm(w_in) > 1e-12 else []
        seeds += list(np.eye(N))
        basis = []
        for v in seeds:
            v = v - (v @ nu) * nu - sum((v @ b) * b for b in basis)
            if np.linalg.norm(v) > 1e-8:
                basis.append(v / np.linalg.norm(v))
            if len(basis) == self.n:
                break
        self.normal = nu
        self.basis = np.array(basis[::-1])

    def jet(self, points):
        s = np.asarray(points, dtype=float)
        if s.shape[-1] != self.n:
            raise InvalidParameterError(f"hyperplane points need {self.n} parameters")
        batch = s.shape[:-1]
        N = self.ambient_dim
        return geo.ImmersionJet(
            position=s @ self.basis,
            tangents=np.broadcast_to(self.basis, batch + (self.n, N)),
            second=np.zeros(batch + (self.n, self.n, N)),
            normals=np.broadcast_to(self.normal, batch + (1, N)),
        )

    def contains(self, points):
        return np.all(np.isfinite(np.asarray(points, float)), axis=-1)

    def verification_window(self):
        return Box([-1.0] * self.n, [1.0] * self.n)

    def ball_box(self, R):
        return Box([-R] * self.n, [R] * self.n)

    def __repr__(self):
        return f"Hyperplane(n={self.n}, normal={self.normal.tolist()})"


class GrimReaper(SolitonModel):
    kind = "grim_reaper"
    n = 1

    def jet(self, points):
        x = np.asarray(points, dtype=float)[..., 0]
        return grim_reaper_jet(x)

    def contains(self, points):
        return np.abs(np.asarray(points, float)[..., 0]) < HALF_PI - 1e-9

    def verification_window(self):
        e = HALF_PI - 1e-3
        return Box([-e], [e])

    def ball_box(self, R):
        x = math.acos(0.5 * math.exp(-R))
        return Box([-x], [x])

    def __repr__(self):
        return "GrimReaper()"


class TiltedGrimReaper(SolitonModel):
    """``u = sec^2 theta log cos(x cos theta) - y tan theta``; sup H^2 = cos^2 theta."""

    kind = "tilted_grim_reaper"
    n = 2

    def __init__(self, theta: float):
        if not 0.0 <= theta < HALF_PI:
            raise InvalidParameterError("theta must lie in [0, pi/2)")
        self.theta = float(theta)

    @property
    def x_limit(self):
        return HALF_PI / math.cos(self.theta)

    def jet(self, points):
        p = np.asarray(points, dtype=float)
        return tilted_grim_reaper_jet(self.theta, p[..., 0], p[..., 1])

    def contains(self, points):
        p = np.asarray(points, float)
        return np.abs(p[..., 0] * math.cos(self.theta)) < HALF_PI - 1e-9

    def verification_window(self):
        e = (HALF_PI - 1e-3) / math.cos(self.theta)
        return Box([-e, -1.0], [e, 1.0])

    def ball_box(self, R):
        c = math.cos(self.theta)
        x = math.acos(0.5 * math.exp(-R * c)) / c
        return Box([-x, -R], [x, R])

    def __repr__(self):
        return f"TiltedGrimReaper(theta={self.theta!r})"


class Bowl(SolitonModel):
    kind = "bowl"
    tolerance = 1e-6

    def __init__(self, profile: BowlProfile | None = None, n: int = 2):
        self.profile = profile if profile is not None else bowl_profile(n)
        self.n = self.profile.n

    def jet(self, points):
        return bowl_jet(self.profile, points)

    def contains(self, points):
        return np.linalg.norm(np.asarray(points, float), axis=-1) <= self.profile.R_max

    def verification_window(self):
        return Ball([0.0] * self.n, self.profile.R_max * (1 - 1e-9))

    def ball_box(self, R):
        if R * math.sqrt(self.n) > self.profile.R_max:
            raise DomainError(f"profile radius {self.profile.R_max} too small for ball {R}")
        return Box([-R] * self.n, [R] * self.n)

    def __repr__(self):
        return f"Bowl(n={self.n}, R_max={self.profile.R_max})"


class GraphSurface(SolitonModel):
    """User-declared graph ``u`` given by ``derivs(points) -> (u, Du, D2u)``.

    Used to feed arbitrary graphs (which need not be translators) through the
    same verification pipeline.
    """

    kind = "graph"

    def __init__(self, n: int, derivs: Callable, window: Window, name: str = "graph"):
        self.n = int(n)
        self.derivs = derivs
        self.window = window
        self.name = name

    def jet(self, points):
        x = np.asarray(points, dtype=float)
        u, du, d2u = (np.asarray(v, float) for v in self.derivs(x))
        batch = x.shape[:-1]
        return geo.GraphJet(
            base_point=x,
            value=u.reshape(batch + (1,)),
            d1=du.reshape(batch + (self.n, 1)),
            d2=d2u.reshape(batch + (self.n, self.n, 1)),
        )

    def contains(self, points):
        return np.ones(np.asarray(points).shape[:-1], bool)

    def verification_window(self):
        return self.window

    def ball_box(self, R):
        return Box([-R] * self.n, [R] * self.n)

    def __repr__(self):
        return f"GraphSurface({self.name!r}, n={self.n})"


def parabola_model() -> GraphSurface:
    """The curve ``y = -x^2``: curved, but not a translator."""
    def derivs(x):
        return -x[..., 0] ** 2, -2 * x, np.full(x.shape[:-1] + (1, 1), -2.0)

    return GraphSurface(1, derivs, Box([-1.0], [1.0]), name="y=-x^2")


# ---------------------------------------------------------------------------
# scans


def _sample(model, window, num):
    if window.dim != model.n:
        raise InvalidWindowError(f"window dimension {window.dim} != model dimension {model.n}")
    if window.is_empty():
        raise InvalidWindowError("window is empty")
    pts, boundary = window.sample(num)
    if not np.all(model.contains(pts)):
        raise DomainError(f"window {window} leaves the domain of {model!r}")
    return pts, boundary


@dataclass(frozen=True)
class ScanEntry:
    window: object
    inf_H2: float
    location: np.ndarray
    sup_H2: float


def inf_H_scan(model: SolitonModel, windows: Sequence[Window], num: int = 401):
    """``inf |Hvec|^2`` over nested windows.

    The reported infimum is cumulative over all windows seen so far; since the
    windows are nested this is the infimum over samples lying in the current
    window, and the sequence is non-increasing by construction.
    """
    if len(windows) == 0:
        raise InvalidWindowError("no windows given")
    out = []
    best, best_loc, sup_run = math.inf, None, -math.inf
    prev = None
    for win in windows:
        if prev is not None and not prev.within(win):
            raise InvalidWindowError("windows must be nested")
        pts, _ = _sample(model, win, num)
        calc = geo.s_calculus(model.jet(pts), model.W)
        H2 = calc.H_vec_norm_sq
        i = int(np.argmin(H2))
        if H2[i] < best:
            best, best_loc = float(H2[i]), pts[i].copy()
        sup_run = max(sup_run, float(np.max(H2)))
        out.append(ScanEntry(window=win, inf_H2=best, location=best_loc, sup_H2=sup_run))
        prev = win
    return out


@dataclass(frozen=True)
class MinSResult:
    value: float
    location: np.ndarray
    on_boundary: bool
    H_positive: bool


def min_S_window(model: SolitonModel, window: Window, num: int = 401) -> MinSResult:
    pts, boundary = _sample(model, window, num)
    calc = geo.s_calculus(model.jet(pts), model.W)
    S = calc.S
    smin = S.min()
    # ties between boundary and interior samples resolve toward the boundary
    tied = np.flatnonzero(S <= smin + 1e-14 * max(1.0, abs(smin)))
    on_b = tied[boundary[tied]]
    i = int(on_b[0]) if len(on_b) else int(tied[0])
    return MinSResult(
        value=float(S[i]),
        location=pts[i].copy(),
        on_boundary=bool(boundary[i]),
        H_positive=bool(np.all(calc.H_vec_norm_sq > 0)),
    )


@dataclass
class VerificationReport:
    model: str
    samples: int
    tol: float
    checks: dict
    locations: dict

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.checks.values())

    def worst(self):
        name = max(self.checks, key=self.checks.get)
        return name, self.checks[name], self.locations[name]

    def lines(self):
        yield f"model: {self.model}"
        yield f"samples: {self.samples}"
        yield f"tolerance: {self.tol:.3e}"
        for name, v in self.checks.items():
            flag = "ok" if v <= self.tol else "FAIL"
            yield f"{name}: max {v:.6e} at {np.round(self.locations[name], 12).tolist()} [{flag}]"


def model_verify(model: SolitonModel, window: Window | None = None, samples: int = 10_000,
                 tol: float | None = None) -> VerificationReport:
    """Check the translator identities at sampled points of ``window``.

    Runs the soliton equation, ``|grad S|^2 + |Hvec|^2 = 1``,
    ``L S = -1``, ``Delta S = -|Hvec|^2`` and the trace of the S-Hessian
    against ``Delta S``.  Raises ``VerificationFailure`` if any check exceeds
    ``tol`` (default: the model's own tolerance).
    """
    window = model.verification_window() if window is None else window
    tol = model.tolerance if tol is None else tol
    if window.dim == 1 or isinstance(window, Box):
        num = max(3, int(round(samples ** (1.0 / window.dim))))
    else:
        num = max(3, int(round(math.sqrt(samples / 4.0))))
    pts, _ = _sample(model, window, num)
    jet = model.jet(pts)
    W = model.W
    calc = geo.s_calculus(jet, W)
    metric = geo.induced_metric(jet)
    trace = np.einsum("...ij,...ij->...", metric.g_inv, geo.hessian_S_matrix(jet, W))
    fields = {
        "soliton_residual": np.linalg.norm(geo.soliton_residual(jet, W), axis=-1),
        "pythagoras": np.abs(calc.pythagoras_defect),
        "drift_laplacian": np.abs(calc.drift_laplacian_S + 1.0),
        "laplacian_orientation": np.abs(calc.lap_S + calc.H_vec_norm_sq),
        "hessian_trace": np.abs(trace - calc.lap_S),
    }
    checks, locs = {}, {}
    for name, v in fields.items():
        i = int(np.argmax(v))
        checks[name] = float(v[i])
        locs[name] = pts[i].copy()
    report = VerificationReport(model=repr(model), samples=len(pts), tol=tol,
                                checks=checks, locations=locs)
    if not report.passed:
        name, val, loc = report.worst()
        raise VerificationFailure(
            f"{model!r}: {name} = {val:.3e} exceeds {tol:.1e} at {loc.tolist()}",
            report=report, worst=(name, val, loc),
        )
    return report
