"""Differential-geometry kernel for graphs and parametrized patches.

Every routine is vectorized over leading batch axes: a ``GraphJet`` whose
``d1`` has shape ``(..., n, k)`` describes one jet per batch index, and all
derived arrays keep the same leading shape.

Sign conventions
----------------
The normal frame is fixed by Gram-Schmidt on ``(-df/dx, e_alpha)`` so that for
hypersurfaces the unit normal points "up" (positive last coordinate).  With
``h_ij = <D_i nu, e_j>`` and ``H = g^ij h_ij`` the mean curvature vector is
``Hvec = -H nu`` and translators satisfy ``H = <nu, W>``.  Under this
convention ``Delta S = -|Hvec|^2`` on a translator, which is why the analytic
models are stored dome side up (grim reaper ``u = log cos x``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    FrameError,
    InsufficientSamplesError,
    InvalidJetError,
    InvalidParameterError,
    InvalidTangentError,
    UnsupportedCodimensionError,
)

__all__ = [
    "GraphJet",
    "ImmersionJet",
    "MetricData",
    "ShapeData",
    "SCalc",
    "BoundsCheck",
    "SampledPatch",
    "JacobiResidual",
    "as_immersion",
    "induced_metric",
    "metric_bounds_check",
    "tangential_part",
    "mean_curvature_vector",
    "normal_frame",
    "hypersurface_shape",
    "soliton_residual",
    "s_calculus",
    "hessian_S",
    "hessian_S_matrix",
    "sample_patch",
    "laplace_beltrami",
    "patch_gradient",
    "jacobi_normal_residual",
    "deltaH_residual",
]

_ALGEBRAIC_TOL = 1e-10


def _as_float(a, name):
    arr = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidJetError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class GraphJet:
    """Second-order data of ``x -> (x, f(x))`` with ``f: R^n -> R^k``.

    ``d1[..., i, a]`` is the partial of ``f^a`` along ``x^i`` and
    ``d2[..., i, j, a]`` the second partial.  ``d2`` is symmetrized on
    construction so the stored array is exactly symmetric.
    """

    base_point: np.ndarray
    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    def __post_init__(self):
        x = _as_float(self.base_point, "base_point")
        v = _as_float(self.value, "value")
        d1 = _as_float(self.d1, "d1")
        d2 = _as_float(self.d2, "d2")
        if d1.ndim < 2 or d2.ndim < 3:
            raise InvalidJetError("d1 must be (..., n, k) and d2 (..., n, n, k)")
        n, k = d1.shape[-2:]
        batch = d1.shape[:-2]
        if x.shape != batch + (n,) or v.shape != batch + (k,):
            raise InvalidJetError(
                f"inconsistent shapes: base {x.shape}, value {v.shape}, d1 {d1.shape}"
            )
        if d2.shape != batch + (n, n, k):
            raise InvalidJetError(f"d2 has shape {d2.shape}, expected {batch + (n, n, k)}")
        d2 = 0.5 * (d2 + np.swapaxes(d2, -2, -3))
        object.__setattr__(self, "base_point", x)
        object.__setattr__(self, "value", v)
        object.__setattr__(self, "d1", d1)
        object.__setattr__(self, "d2", d2)

    @property
    def n(self) -> int:
        return self.d1.shape[-2]

    @property
    def k(self) -> int:
        return self.d1.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return self.d1.shape[:-2]

    def immersion(self) -> "ImmersionJet":
        n, k, batch = self.n, self.k, self.batch_shape
        N = n + k
        position = np.concatenate([self.base_point, self.value], axis=-1)
        tangents = np.zeros(batch + (n, N))
        tangents[..., :, :n] = np.eye(n)
        tangents[..., :, n:] = self.d1
        second = np.zeros(batch + (n, n, N))
        second[..., n:] = self.d2
        return ImmersionJet(position, tangents, second, _graph_normals(self.d1))


@dataclass(frozen=True)
class ImmersionJet:
    """Jet of a general parametrization ``s -> X(s)`` into ``R^N``.

    ``tangents[..., i, :]`` is ``dX/ds^i`` and ``second[..., i, j, :]`` is
    ``d^2X/ds^i ds^j``.  ``normals[..., a, :]`` is an orthonormal frame of the
    normal space; when omitted it is computed from the tangents and, for
    hypersurfaces, oriented to have non-negative last coordinate.
    """

    position: np.ndarray
    tangents: np.ndarray
    second: np.ndarray
    normals: np.ndarray | None = None

    def __post_init__(self):
        X = _as_float(self.position, "position")
        T = _as_float(self.tangents, "tangents")
        Q = _as_float(self.second, "second")
        n, N = T.shape[-2:]
        if X.shape[-1] != N or Q.shape[-3:] != (n, n, N):
            raise InvalidJetError("inconsistent immersion jet shapes")
        Q = 0.5 * (Q + np.swapaxes(Q, -2, -3))
        object.__setattr__(self, "position", X)
        object.__setattr__(self, "tangents", T)
        object.__setattr__(self, "second", Q)
        if self.normals is None:
            object.__setattr__(self, "normals", _complement_normals(T))
        else:
            object.__setattr__(self, "normals", _as_float(self.normals, "normals"))

    @property
    def n(self) -> int:
        return self.tangents.shape[-2]

    @property
    def ambient_dim(self) -> int:
        return self.tangents.shape[-1]

    @property
    def k(self) -> int:
        return self.ambient_dim - self.n

    @property
    def batch_shape(self) -> tuple:
        return self.tangents.shape[:-2]

    def immersion(self) -> "ImmersionJet":
        return self


def as_immersion(jet) -> ImmersionJet:
    try:
        return jet.immersion()
    except AttributeError:
        raise InvalidJetError(f"expected GraphJet or ImmersionJet, got {type(jet).__name__}")


def _gram_schmidt(vectors):
    """Modified Gram-Schmidt over the second-to-last axis of ``(..., m, N)``."""
    out = np.array(vectors, dtype=float, copy=True)
    m = out.shape[-2]
    for a in range(m):
        for b in range(a):
            out[..., a, :] -= np.sum(out[..., a, :] * out[..., b, :], axis=-1)[..., None] * out[..., b, :]
        norm = np.linalg.norm(out[..., a, :], axis=-1)
        if np.any(norm < 1e-300) or not np.all(np.isfinite(norm)):
            raise FrameError("normal frame is degenerate")
        out[..., a, :] /= norm[..., None]
    return out


def _graph_normals(d1):
    n, k = d1.shape[-2:]
    batch = d1.shape[:-2]
    cand = np.zeros(batch + (k, n + k))
    cand[..., :, :n] = -np.swapaxes(d1, -1, -2)
    cand[..., :, n:] = np.eye(k)
    return _gram_schmidt(cand)


def _complement_normals(T):
    n, N = T.shape[-2:]
    k = N - n
    if k < 1:
        raise InvalidJetError("parametrization has no normal space")
    _, _, vt = np.linalg.svd(T)
    nu = vt[..., n:, :]
    if k == 1:
        sign = np.where(nu[..., 0, -1] < 0, -1.0, 1.0)
        nu = nu * sign[..., None, None]
    return _gram_schmidt(nu)


@dataclass(frozen=True)
class MetricData:
    g: np.ndarray
    g_inv: np.ndarray
    sqrt_det: np.ndarray


@dataclass(frozen=True)
class ShapeData:
    normal: np.ndarray
    second_fundamental: np.ndarray
    mean_curvature: np.ndarray
    norm_A_sq: np.ndarray


@dataclass(frozen=True)
class SCalc:
    """S-function data at a jet: value, ``|grad S|^2``, ``|Hvec|^2``, ``Delta S``.

    ``lap_S`` is computed as ``<Hvec, W>``, the Laplacian of a linear
    function on any immersion.  On a translator this equals ``-|Hvec|^2``
    and ``grad_S_norm_sq + H_vec_norm_sq == 1``; elsewhere neither holds,
    which is what ``model_verify`` uses to reject non-translators.
    """

    S: np.ndarray
    grad_S_norm_sq: np.ndarray
    H_vec_norm_sq: np.ndarray
    lap_S: np.ndarray

    @property
    def pythagoras_defect(self):
        return self.grad_S_norm_sq + self.H_vec_norm_sq - 1.0

    @property
    def drift_laplacian_S(self):
        """``L S = Delta S - <W^T, grad S>``; identically -1 on translators."""
        return self.lap_S - self.grad_S_norm_sq


@dataclass(frozen=True)
class BoundsCheck:
    ok: np.ndarray | bool
    margin: np.ndarray | float


def induced_metric(jet) -> MetricData:
    if isinstance(jet, GraphJet):
        g = np.eye(jet.n) + np.einsum("...ia,...ja->...ij", jet.d1, jet.d1)
    else:
        T = as_immersion(jet).tangents
        g = np.einsum("...ia,...ja->...ij", T, T)
    g_inv = np.linalg.inv(g)
    g_inv = 0.5 * (g_inv + np.swapaxes(g_inv, -1, -2))
    return MetricData(g=g, g_inv=g_inv, sqrt_det=np.sqrt(np.linalg.det(g)))


def metric_bounds_check(metric: MetricData, tau: float, tol: float = 1e-12) -> BoundsCheck:
    """Test ``I/(1+tau) <= g^{-1} <= I`` eigenvalue-wise.

    ``margin`` is the signed distance of the eigenvalues to the nearer bound
    (negative when a bound is violated).
    """
    if tau < 0:
        raise InvalidParameterError(f"tau must be non-negative, got {tau}")
    eig = np.linalg.eigvalsh(metric.g_inv)
    lower = 1.0 / (1.0 + tau)
    margin = np.minimum(eig - lower, 1.0 - eig).min(axis=-1)
    ok = margin >= -tol
    if np.ndim(margin) == 0:
        return BoundsCheck(bool(ok), float(margin))
    return BoundsCheck(ok, margin)


def tangential_part(jet, v):
    """Orthogonal projection of ambient vectors ``v`` onto the tangent space."""
    imm = as_immersion(jet)
    metric = induced_metric(imm)
    v = np.asarray(v, dtype=float)
    c = np.einsum("...ia,...a->...i", imm.tangents, v)
    coef = np.einsum("...ij,...j->...i", metric.g_inv, c)
    return np.einsum("...i,...ia->...a", coef, imm.tangents)


def _trace_second(imm, metric):
    return np.einsum("...ij,...ija->...a", metric.g_inv, imm.second)


def mean_curvature_vector(jet):
    imm = as_immersion(jet)
    metric = induced_metric(imm)
    v = _trace_second(imm, metric)
    return v - tangential_part(imm, v)


def normal_frame(jet):
    return as_immersion(jet).normals


def _check_unit(W, N):
    W = np.asarray(W, dtype=float)
    if W.shape[-1] != N:
        raise InvalidParameterError(f"W must have {N} components, got shape {W.shape}")
    if not np.allclose(np.linalg.norm(W, axis=-1), 1.0, atol=1e-12):
        raise InvalidParameterError("W must be a unit vector")
    return W


def hypersurface_shape(jet, orientation: int = 1) -> ShapeData:
    imm = as_immersion(jet)
    if imm.k != 1:
        raise UnsupportedCodimensionError(f"hypersurface data needs k = 1, got k = {imm.k}")
    if orientation not in (1, -1):
        raise InvalidParameterError("orientation must be +1 or -1")
    metric = induced_metric(imm)
    nu = orientation * imm.normals[..., 0, :]
    # h_ij = <D_i nu, X_j> = -<nu, X_ij>
    h = -np.einsum("...a,...ija->...ij", nu, imm.second)
    H = np.einsum("...ij,...ij->...", metric.g_inv, h)
    mixed = np.einsum("...ik,...kj->...ij", metric.g_inv, h)
    A2 = np.einsum("...ij,...ji->...", mixed, mixed)
    return ShapeData(normal=nu, second_fundamental=h, mean_curvature=H, norm_A_sq=A2)


def soliton_residual(jet, W):
    """``H_a - <nu_a, W>`` in the Gram-Schmidt normal frame, shape ``(..., k)``.

    For ``k > 1`` only the norm of the result is frame independent; it equals
    ``|Hvec + W^perp|``.
    """
    imm = as_immersion(jet)
    W = _check_unit(W, imm.ambient_dim)
    Hvec = mean_curvature_vector(imm)
    H_alpha = -np.einsum("...ka,...a->...k", imm.normals, Hvec)
    return H_alpha - np.einsum("...ka,...a->...k", imm.normals, W)


def s_calculus(jet, W) -> SCalc:
    imm = as_immersion(jet)
    W = _check_unit(W, imm.ambient_dim)
    S = np.einsum("...a,...a->...", imm.position, W)
    WT = tangential_part(imm, np.broadcast_to(W, imm.position.shape))
    Hvec = mean_curvature_vector(imm)
    return SCalc(
        S=S,
        grad_S_norm_sq=np.einsum("...a,...a->...", WT, WT),
        H_vec_norm_sq=np.einsum("...a,...a->...", Hvec, Hvec),
        lap_S=np.einsum("...a,...a->...", Hvec, W),
    )


def hessian_S_matrix(jet, W):
    """Coordinate matrix of ``-H_a h_a(X_i, X_j) = -<Hvec, (X_ij)^perp>``."""
    imm = as_immersion(jet)
    _check_unit(W, imm.ambient_dim)
    Hvec = mean_curvature_vector(imm)
    # Hvec is normal, so pairing with X_ij picks the normal part automatically
    return -np.einsum("...a,...ija->...ij", Hvec, imm.second)


def hessian_S(jet, W, U, V):
    """``nabla^2 S(U, V) = -H_a h_a(U, V)`` for ambient tangent vectors U, V."""
    imm = as_immersion(jet)
    metric = induced_metric(imm)
    coords = []
    for name, vec in (("U", U), ("V", V)):
        vec = np.asarray(vec, dtype=float)
        normal_part = vec - tangential_part(imm, vec)
        scale = np.maximum(1.0, np.linalg.norm(vec, axis=-1))
        if np.any(np.linalg.norm(normal_part, axis=-1) > 1e-8 * scale):
            raise InvalidTangentError(f"{name} is not tangent to the graph")
        c = np.einsum("...ia,...a->...i", imm.tangents, vec)
        coords.append(np.einsum("...ij,...j->...i", metric.g_inv, c))
    hess = hessian_S_matrix(imm, W)
    return np.einsum("...i,...ij,...j->...", coords[0], hess, coords[1])


# ---------------------------------------------------------------------------
# sampled patches and discrete identities


@dataclass(frozen=True)
class SampledPatch:
    """Jets sampled on a uniform tensor grid of parameter values."""

    axes: tuple
    spacing: tuple
    jet: ImmersionJet
    metric: MetricData = field(repr=False)
    shape: ShapeData | None = field(repr=False, default=None)

    @property
    def grid_shape(self) -> tuple:
        return tuple(len(a) for a in self.axes)

    @property
    def dim(self) -> int:
        return len(self.axes)

    def interior(self):
        return tuple(slice(1, -1) for _ in self.axes)

    def interior_points(self):
        mesh = np.meshgrid(*[a[1:-1] for a in self.axes], indexing="ij")
        return np.stack(mesh, axis=-1)


def sample_patch(jet_fn: Callable[[np.ndarray], object], axes: Sequence) -> SampledPatch:
    """Evaluate ``jet_fn`` on the tensor grid spanned by ``axes``.

    Each axis must be uniformly spaced and contain at least three nodes.
    """
    axes = tuple(np.asarray(a, dtype=float) for a in axes)
    spacing = []
    for a in axes:
        if a.ndim != 1 or len(a) < 3:
            raise InsufficientSamplesError("every axis needs at least 3 samples")
        d = np.diff(a)
        if np.ptp(d) > 1e-9 * abs(d[0]) or d[0] <= 0:
            raise InvalidParameterError("axes must be increasing and uniformly spaced")
        spacing.append(float((a[-1] - a[0]) / (len(a) - 1)))
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    imm = as_immersion(jet_fn(pts))
    metric = induced_metric(imm)
    shape = hypersurface_shape(imm) if imm.k == 1 else None
    return SampledPatch(axes=axes, spacing=tuple(spacing), jet=imm, metric=metric, shape=shape)


def _sl(ndim, axis, s):
    out = [slice(None)] * ndim
    out[axis] = s
    return tuple(out)


def _expand(coef, trailing):
    return coef.reshape(coef.shape + (1,) * trailing)


def laplace_beltrami(patch: SampledPatch, values):
    """Divergence-form Laplace-Beltrami at interior nodes.

    Computes ``(1/sqrt g) d_i (sqrt g g^ij d_j phi)``.  Diagonal terms use
    half-node coefficients averaged from the nodes; mixed terms use centered
    differences of ``sqrt g g^ij d_j phi``.  ``values`` may carry trailing
    component axes.
    """
    phi = np.asarray(values, dtype=float)
    n = patch.dim
    if phi.shape[:n] != patch.grid_shape:
        raise InvalidParameterError("field does not match the patch grid")
    tr = phi.ndim - n
    sg = patch.metric.sqrt_det
    gi = patch.metric.g_inv
    inner = patch.interior()
    out = np.zeros(tuple(m - 2 for m in patch.grid_shape) + phi.shape[n:])
    for i in range(n):
        hi = patch.spacing[i]
        c = sg * gi[..., i, i]
        c_half = 0.5 * (c[_sl(n, i, slice(None, -1))] + c[_sl(n, i, slice(1, None))])
        flux = _expand(c_half, tr) * np.diff(phi, axis=i)
        div = np.diff(flux, axis=i) / hi**2
        others = tuple(slice(None) if ax == i else slice(1, -1) for ax in range(n))
        out += div[others]
        for j in range(n):
            if j == i:
                continue
            hj = patch.spacing[j]
            a = sg * gi[..., i, j]
            dj = (phi[_sl(n, j, slice(2, None))] - phi[_sl(n, j, slice(None, -2))]) / (2 * hj)
            prod = _expand(a[_sl(n, j, slice(1, -1))], tr) * dj
            di = (prod[_sl(n, i, slice(2, None))] - prod[_sl(n, i, slice(None, -2))]) / (2 * hi)
            rest = tuple(slice(None) if ax in (i, j) else slice(1, -1) for ax in range(n))
            out += di[rest]
    return out / _expand(sg[inner], tr)


def _centered_partials(patch, scalar):
    n = patch.dim
    parts = []
    for j in range(n):
        hj = patch.spacing[j]
        d = (scalar[_sl(n, j, slice(2, None))] - scalar[_sl(n, j, slice(None, -2))]) / (2 * hj)
        others = tuple(slice(None) if ax == j else slice(1, -1) for ax in range(n))
        parts.append(d[others])
    return np.stack(parts, axis=-1)


def patch_gradient(patch: SampledPatch, scalar):
    """Ambient gradient ``g^ij d_j phi X_i`` of a nodal scalar at interior nodes."""
    inner = patch.interior()
    dphi = _centered_partials(patch, np.asarray(scalar, dtype=float))
    coef = np.einsum("...ij,...j->...i", patch.metric.g_inv[inner], dphi)
    return np.einsum("...i,...ia->...a", coef, patch.jet.tangents[inner])


@dataclass(frozen=True)
class JacobiResidual:
    vector: np.ndarray
    scalar: np.ndarray

    def max_abs(self) -> float:
        return float(np.max(np.linalg.norm(self.vector, axis=-1)))


def _require_hypersurface(patch):
    if patch.shape is None:
        raise UnsupportedCodimensionError("curvature identities are restricted to k = 1")


def jacobi_normal_residual(patch: SampledPatch, e=None) -> JacobiResidual:
    """Discrete ``Delta nu - grad H + |A|^2 nu`` and its projection on ``e``.

    The scalar part is ``Delta f - <grad H, e> + |A|^2 f`` with ``f = <nu, e>``;
    ``e`` defaults to the last coordinate axis.
    """
    _require_hypersurface(patch)
    N = patch.jet.ambient_dim
    e = np.eye(N)[-1] if e is None else _check_unit(e, N)
    inner = patch.interior()
    nu = patch.shape.normal
    H = patch.shape.mean_curvature
    A2 = patch.shape.norm_A_sq[inner]
    grad_H = patch_gradient(patch, H)
    vec = laplace_beltrami(patch, nu) - grad_H + A2[..., None] * nu[inner]
    f = nu @ e
    scal = laplace_beltrami(patch, f) - grad_H @ e + A2 * f[inner]
    return JacobiResidual(vector=vec, scalar=scal)


def deltaH_residual(patch: SampledPatch, W=None, drift_sign: int = -1):
    """Discrete ``Delta H + drift_sign <W^T, grad H> + H |A|^2`` at interior nodes.

    With the stored orientation (``Delta S = -|Hvec|^2``) translators satisfy
    ``L H + |A|^2 H = 0`` for ``L = Delta - grad_{W^T}``, which is the default
    ``drift_sign = -1``.  ``drift_sign = +1`` gives the opposite-orientation
    form, which does not vanish on these models.
    """
    _require_hypersurface(patch)
    if drift_sign not in (-1, 1):
        raise InvalidParameterError("drift_sign must be +1 or -1")
    N = patch.jet.ambient_dim
    W = np.eye(N)[-1] if W is None else _check_unit(W, N)
    inner = patch.interior()
    H = patch.shape.mean_curvature
    grad_H = patch_gradient(patch, H)
    # grad H is tangent, so <W^T, grad H> = <W, grad H>
    return (
        laplace_beltrami(patch, H)
        + drift_sign * (grad_H @ W)
        + H[inner] * patch.shape.norm_A_sq[inner]
    )
