"""Weighted-measure analysis on sampled soliton patches.

The measure is ``dm = e^{-S} dv_g``.  Patches are tensor grids over a
parameter box; integrals use node-centered dual cells (half cells on the
faces), i.e. the composite trapezoid rule, with weights ``sqrt(g) e^{-S}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import geometry as geo
from .errors import (
    ConditionError,
    DomainError,
    InsufficientSamplesError,
    InvalidParameterError,
    SolverError,
    UndefinedPowerError,
)
from .solitons import Box, SolitonModel


@dataclass
class WeightedMesh:
    model: SolitonModel
    box: Box
    axes: tuple
    spacing: tuple
    points: np.ndarray      # grid_shape + (n,)
    position: np.ndarray    # grid_shape + (N,)
    g_inv: np.ndarray
    sqrt_det: np.ndarray
    S: np.ndarray
    H: np.ndarray
    H2: np.ndarray
    A2: np.ndarray
    LS: np.ndarray          # analytic drift Laplacian of S
    weights: np.ndarray     # dm quadrature weights
    boundary: np.ndarray    # bool, on a face of the box
    cell: np.ndarray = field(repr=False)   # dual-cell parameter volume

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return self.S.shape

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def interior(self):
        return ~self.boundary


def _dual_cells(axes):
    per_axis = []
    for a in axes:
        h = np.full(len(a), a[1] - a[0])
        h[0] *= 0.5
        h[-1] *= 0.5
        per_axis.append(h)
    return np.prod(np.stack(np.meshgrid(*per_axis, indexing="ij"), -1), axis=-1)


def _box_axes(box: Box, h: float):
    axes = []
    for lo, hi in zip(box.lo, box.hi):
        m = max(int(round((hi - lo) / h)), 2) + 1
        axes.append(np.linspace(lo, hi, m))
    return tuple(axes)


def _geometry_on(model, pts):
    jet = geo.as_immersion(model.jet(pts))
    metric = geo.induced_metric(jet)
    shape = geo.hypersurface_shape(jet)
    calc = geo.s_calculus(jet, model.W)
    return jet, metric, shape, calc


def build_weighted_mesh(model: SolitonModel, box: Box, h: float) -> WeightedMesh:
    """Sample ``model`` on ``box`` with spacing close to ``h``."""
    if box.dim != model.n:
        raise DomainError(f"box dimension {box.dim} != model dimension {model.n}")
    if box.is_empty():
        raise DomainError("box has zero width")
    if not h > 0:
        raise InvalidParameterError("h must be positive")
    axes = _box_axes(box, h)
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1)
    if not np.all(model.contains(pts)):
        raise DomainError(f"box {box} leaves the domain of {model!r}")
    jet, metric, shape, calc = _geometry_on(model, pts)
    cell = _dual_cells(axes)
    weights = cell * metric.sqrt_det * np.exp(-calc.S)
    idx = np.stack(np.meshgrid(*[np.arange(len(a)) for a in axes], indexing="ij"), -1)
    sizes = np.array([len(a) for a in axes])
    boundary = np.any((idx == 0) | (idx == sizes - 1), axis=-1)
    return WeightedMesh(
        model=model, box=box, axes=axes, spacing=tuple(a[1] - a[0] for a in axes),
        points=pts, position=jet.position, g_inv=metric.g_inv, sqrt_det=metric.sqrt_det,
        S=calc.S, H=shape.mean_curvature, H2=calc.H_vec_norm_sq, A2=shape.norm_A_sq,
        LS=calc.drift_laplacian_S, weights=weights, boundary=boundary, cell=cell,
    )


# ---------------------------------------------------------------------------
# stability eigenproblem


def _stiffness(mesh: WeightedMesh):
    """Sparse ``int g^ij d_i f d_j f dm`` on the full node set."""
    model = mesh.model
    shape = mesh.shape
    N = int(np.prod(shape))
    ids = np.arange(N).reshape(shape)
    if mesh.n == 1:
        x = mesh.axes[0]
        mid = 0.5 * (x[:-1] + x[1:])
        _, metric, _, calc = _geometry_on(model, mid[:, None])
        c = metric.g_inv[:, 0, 0] * metric.sqrt_det * np.exp(-calc.S) / np.diff(x)
        i, j = ids[:-1], ids[1:]
        rows = np.concatenate([i, j, i, j])
        cols = np.concatenate([i, j, j, i])
        vals = np.concatenate([c, c, -c, -c])
        return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
    if mesh.n != 2:
        raise InvalidParameterError("stiffness assembly implemented for n <= 2")
    x, y = mesh.axes
    hx, hy = x[1] - x[0], y[1] - y[0]
    g = 0.5 / math.sqrt(3.0)
    gauss = [(0.5 - g, 0.5 - g), (0.5 + g, 0.5 - g), (0.5 - g, 0.5 + g), (0.5 + g, 0.5 + g)]
    X0, Y0 = np.meshgrid(x[:-1], y[:-1], indexing="ij")
    corners = [(0, 0), (1, 0), (0, 1), (1, 1)]
    E = X0.size
    Ke = np.zeros((E, 4, 4))
    for xi, eta in gauss:
        pts = np.stack([X0 + xi * hx, Y0 + eta * hy], -1).reshape(-1, 2)
        _, metric, _, calc = _geometry_on(model, pts)
        C = metric.g_inv * (metric.sqrt_det * np.exp(-calc.S))[:, None, None]
        grads = np.array([
            [(-1 if cx == 0 else 1) * ((1 - eta) if cy == 0 else eta) / hx,
             (-1 if cy == 0 else 1) * ((1 - xi) if cx == 0 else xi) / hy]
            for cx, cy in corners
        ])
        Ke += 0.25 * hx * hy * np.einsum("ai,eij,bj->eab", grads, C, grads)
    I0, J0 = np.meshgrid(np.arange(len(x) - 1), np.arange(len(y) - 1), indexing="ij")
    node = np.stack([ids[I0 + cx, J0 + cy].ravel() for cx, cy in corners], -1)
    rows = np.repeat(node, 4, axis=1).ravel()
    cols = np.tile(node, (1, 4)).ravel()
    return sp.csr_matrix((Ke.ravel(), (rows, cols)), shape=(N, N))


def stability_forms(mesh: WeightedMesh):
    """``(A_form, B_form, interior_ids)`` restricted to interior nodes."""
    K = _stiffness(mesh)
    w = mesh.weights.ravel()
    A_full = K - sp.diags(mesh.A2.ravel() * w)
    inner = np.flatnonzero(mesh.interior().ravel())
    A = A_full[inner][:, inner].tocsc()
    B = sp.diags(w[inner]).tocsc()
    return A, B, inner


@dataclass
class SpectralResult:
    lambda1: float
    eigenfield: np.ndarray
    residual: float
    iterations: int
    history: list


def drift_first_eigenvalue(mesh: WeightedMesh, tol: float = 1e-9,
                           max_iter: int = 5000) -> SpectralResult:
    """Smallest eigenvalue of ``A phi = lambda B phi`` by shifted inverse iteration.

    The shift ``sigma = -max|A|^2 - 1`` lies below the spectrum, so
    ``A - sigma B`` is positive definite and the Rayleigh quotient decreases
    monotonically to ``lambda_1``.
    """
    for a in mesh.axes:
        if len(a) < 5:
            raise InsufficientSamplesError("need at least 3 interior nodes per axis")
    A, B, inner = stability_forms(mesh)
    sigma = -float(mesh.A2.max()) - 1.0
    lu = splu((A - sigma * B).tocsc())
    bdiag = B.diagonal()
    x = np.ones(len(inner))
    x /= math.sqrt(x @ (bdiag * x))
    history = []
    lam = float(x @ (A @ x))
    res = math.inf
    for it in range(1, max_iter + 1):
        y = lu.solve(bdiag * x)
        x = y / math.sqrt(y @ (bdiag * y))
        Ax = A @ x
        lam = float(x @ Ax)
        history.append(lam)
        r = Ax - lam * bdiag * x
        res = float(np.linalg.norm(r) / np.linalg.norm(bdiag * x))
        if res <= tol:
            break
    else:
        raise SolverError(f"inverse iteration did not converge (residual {res:.3e})")
    if x.sum() < 0:
        x = -x
    phi = np.zeros(mesh.S.size)
    phi[inner] = x
    return SpectralResult(lam, phi.reshape(mesh.shape), res, it, history)


def rayleigh_quotient(mesh: WeightedMesh, phi) -> float:
    """``int (|grad f|^2 - |A|^2 f^2) dm / int f^2 dm`` on interior values of ``phi``."""
    phi = _field(mesh, phi)
    A, B, inner = stability_forms(mesh)
    v = phi.ravel()[inner]
    return float(v @ (A @ v) / (v @ (B @ v)))


def stability_condition(mesh: WeightedMesh, a: float, tol: float = 1e-12):
    """Sup over nodes of ``a(a-1) - a^2 H^2 + |A|^2`` and whether it is ``<= 0``."""
    if not a > 0:
        raise InvalidParameterError("a must be positive")
    val = float(np.max(a * (a - 1) - a * a * mesh.H2 + mesh.A2))
    return val, bool(val <= tol)


# ---------------------------------------------------------------------------
# extrinsic balls


def _ball_fraction(mesh: WeightedMesh, R: float, sub: int = 8):
    """Fraction of each dual cell whose image lies in ``B_R(0)``.

    Cells whose image is farther than one cell diameter from the sphere are
    classified directly; the rest are sub-sampled with the first-order Taylor
    expansion of the position.
    """
    pos = mesh.position
    r = np.linalg.norm(pos, axis=-1)
    jet = geo.as_immersion(mesh.model.jet(mesh.points))
    T = jet.tangents                                   # shape + (n, N)
    hs = np.array(mesh.spacing)
    reach = np.linalg.norm(T * hs[:, None], axis=(-2, -1)) * 0.5 * math.sqrt(mesh.n) + 1e-12
    frac = (r <= R).astype(float)
    near = np.abs(r - R) <= reach
    if not np.any(near):
        return frac
    offs = (np.arange(sub) + 0.5) / sub - 0.5
    grid = np.stack(np.meshgrid(*[offs] * mesh.n, indexing="ij"), -1).reshape(-1, mesh.n)
    idx = np.argwhere(near)
    P = pos[near]
    Tn = T[near]
    for q, (i, p0, t0) in enumerate(zip(idx, P, Tn)):
        lo = np.array([-0.5 if 0 < i[a] < mesh.shape[a] - 1 else (0.0 if i[a] == 0 else -0.5)
                       for a in range(mesh.n)])
        hi = np.array([0.5 if 0 < i[a] < mesh.shape[a] - 1 else (0.5 if i[a] == 0 else 0.0)
                       for a in range(mesh.n)])
        d = (lo + (grid + 0.5) * (hi - lo)) * hs
        pts = p0 + d @ t0
        frac[tuple(i)] = float(np.mean(np.linalg.norm(pts, axis=-1) <= R))
    return frac


@dataclass
class GrowthReport:
    a: float
    eps: float
    sup_H2: float
    R: np.ndarray
    f_R: np.ndarray
    ratio: np.ndarray
    min_ratio: float
    tail_ok: bool


def weighted_volume_growth(model: SolitonModel, a: float, R0: float, R1: float,
                           samples: int = 401, n_radii: int = 31) -> GrowthReport:
    """Growth of ``f(R) = int_{|X| <= R} e^{(a-1) S} dv`` against ``e^{eps (R - R0)}``.

    ``eps = a - 1 - a sup H^2`` with the sup sampled over ``B_{R1}``.  The
    sampling box must contain the whole ball, which is checked on its faces.
    """
    if not a > 0:
        raise InvalidParameterError("a must be positive")
    if not 0 < R0 < R1:
        raise InvalidParameterError("need 0 < R0 < R1")
    box = model.ball_box(R1)
    h = max((hi - lo) for lo, hi in zip(box.lo, box.hi)) / (samples - 1)
    mesh = build_weighted_mesh(model, box, h)
    r = np.linalg.norm(mesh.position, axis=-1)
    tail_ok = bool(np.all(r[mesh.boundary] >= R1 * (1 - 1e-12)))
    if not tail_ok:
        raise ConditionError("sampling box does not contain the ball; integral may be truncated")
    inside = r <= R1
    sup_H2 = float(mesh.H2[inside].max())
    if not sup_H2 < (a - 1) / a:
        raise ConditionError(f"sup H^2 = {sup_H2:.6g} is not below (a-1)/a = {(a - 1) / a:.6g}")
    eps = a - 1 - a * sup_H2
    dens = mesh.cell * mesh.sqrt_det * np.exp((a - 1) * mesh.S)
    radii = np.linspace(R0, R1, n_radii)
    fR = np.array([float(np.sum(dens * _ball_fraction(mesh, R))) for R in radii])
    ratio = fR * np.exp(-eps * (radii - R0)) / fR[0]
    return GrowthReport(a, eps, sup_H2, radii, fR, ratio, float(ratio.min()), tail_ok)


# ---------------------------------------------------------------------------
# divergence identity


def _field(mesh, phi):
    if callable(phi):
        phi = phi(mesh.points)
    phi = np.asarray(phi, float)
    if phi.shape != mesh.shape:
        raise InvalidParameterError(f"field shape {phi.shape} != mesh shape {mesh.shape}")
    return phi


def _d1(f, h, axis):
    """Second-order first derivative; one-sided on the faces."""
    f = np.moveaxis(f, axis, 0)
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    d[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
    d[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    return np.moveaxis(d, 0, axis)


def _d2(f, h, axis):
    f = np.moveaxis(f, axis, 0)
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    d[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2
    d[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h**2
    return np.moveaxis(d, 0, axis)


def drift_laplacian_field(mesh: WeightedMesh, phi):
    """Discrete ``L phi = Delta phi - <W^T, grad phi>`` at every node.

    Uses the non-divergence form ``g^ij (phi_ij - Gamma^k_ij phi_k) - g^ij S_i phi_j``
    with Christoffel symbols from the model jet.
    """
    phi = _field(mesh, phi)
    n = mesh.n
    hs = mesh.spacing
    d1 = np.stack([_d1(phi, hs[i], i) for i in range(n)], -1)
    d2 = np.empty(mesh.shape + (n, n))
    for i in range(n):
        d2[..., i, i] = _d2(phi, hs[i], i)
        for j in range(i + 1, n):
            d2[..., i, j] = d2[..., j, i] = _d1(d1[..., i], hs[j], j)
    jet = geo.as_immersion(mesh.model.jet(mesh.points))
    gi = mesh.g_inv
    # Gamma^k_ij phi_k = <X_ij, X_l> g^{lk} phi_k
    tang_grad = np.einsum("...lk,...k->...l", gi, d1)
    christ = np.einsum("...ija,...la,...l->...ij", jet.second, jet.tangents, tang_grad)
    lap = np.einsum("...ij,...ij->...", gi, d2 - christ)
    S_i = jet.tangents @ mesh.model.W
    drift = np.einsum("...ij,...i,...j->...", gi, S_i, d1)
    return lap - drift


@dataclass(frozen=True)
class DivergenceReport:
    lhs: float
    rhs: float
    residual: float


def divergence_identity_check(mesh: WeightedMesh, phi) -> DivergenceReport:
    """Compare ``int L phi dm`` with the weighted boundary flux of ``grad phi``."""
    phi = _field(mesh, phi)
    Lphi = drift_laplacian_field(mesh, phi)
    lhs = float(np.sum(mesh.weights * Lphi))
    n = mesh.n
    hs = mesh.spacing
    d1 = np.stack([_d1(phi, hs[i], i) for i in range(n)], -1)
    flux = np.einsum("...ij,...j->...i", mesh.g_inv, d1) * (mesh.sqrt_det * np.exp(-mesh.S))[..., None]
    rhs = 0.0
    for i in range(n):
        for end, sign in ((0, -1.0), (-1, 1.0)):
            face = np.take(flux[..., i], end if end == 0 else mesh.shape[i] - 1, axis=i)
            if n == 1:
                rhs += sign * float(face)
            else:
                other = [mesh.axes[j] for j in range(n) if j != i]
                w = _dual_cells(other)
                rhs += sign * float(np.sum(w * face))
    return DivergenceReport(lhs, rhs, abs(lhs - rhs))


# ---------------------------------------------------------------------------
# planarity hypotheses


@dataclass
class PlanarityEntry:
    R: float
    value: float
    nu_e_range: tuple
    grad_H_e_range: tuple
    annulus_volume: float


def planarity_hypothesis_report(model: SolitonModel, e, p: float, R_list, samples: int = 401):
    """``R^-2 int_{T_R} <nu, e>^{p+1} dv`` on ``T_R = M_{2R} minus M_R``.

    Also reports the sampled ranges of ``<nu, e>`` and ``<grad H, e>`` on
    ``T_R``.  No conclusion is drawn.
    """
    if not p < 0:
        raise InvalidParameterError("p must be negative")
    e = np.asarray(e, float)
    if e.shape != (model.ambient_dim,) or abs(np.linalg.norm(e) - 1) > 1e-12:
        raise InvalidParameterError("e must be a unit vector in the ambient space")
    R_list = sorted(float(R) for R in R_list)
    box = model.ball_box(2 * R_list[-1])
    h = max((hi - lo) for lo, hi in zip(box.lo, box.hi)) / (samples - 1)
    mesh = build_weighted_mesh(model, box, h)
    patch = geo.sample_patch(model.jet, mesh.axes)
    nu_e = patch.shape.normal @ e
    grad_H = np.zeros(mesh.shape + (model.ambient_dim,))
    grad_H[tuple(slice(1, -1) for _ in range(mesh.n))] = geo.patch_gradient(patch, patch.shape.mean_curvature)
    grad_H_e = grad_H @ e
    power = p + 1
    integer_power = float(power).is_integer()
    dv = mesh.cell * mesh.sqrt_det
    out = []
    for R in R_list:
        frac = _ball_fraction(mesh, 2 * R) - _ball_fraction(mesh, R)
        sel = frac > 0
        if not integer_power and np.any(nu_e[sel] <= 0):
            raise UndefinedPowerError(f"<nu, e> <= 0 on T_{R} with non-integer power {power}")
        integrand = np.ones_like(nu_e) if power == 0 else np.where(sel, nu_e, 1.0) ** power
        vol = float(np.sum(dv * frac))
        value = float(np.sum(dv * frac * integrand)) / R**2
        interior = sel & mesh.interior()
        gh = grad_H_e[interior] if np.any(interior) else np.zeros(1)
        out.append(PlanarityEntry(R, value, (float(nu_e[sel].min()), float(nu_e[sel].max())),
                                  (float(gh.min()), float(gh.max())), vol))
    return out
