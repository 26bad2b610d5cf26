"""Checks of the a-priori bounds along a discrete flow."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParameterError, MonitorViolation
from . import kernels
from .domain import BoundaryData, DomainSpec

SQRT2 = math.sqrt(2.0)


def small_data_value(D, n, sup_D2psi, sup_Dpsi_boundary):
    """``8 D (n sup|D^2 psi| + 1) + sqrt(2) sup_{boundary} |D psi|``."""
    return 8.0 * D * (n * sup_D2psi + 1.0) + SQRT2 * sup_Dpsi_boundary


def check_small_data_condition(spec: DomainSpec, psi: BoundaryData):
    """Return the smallness value and whether it is below 1."""
    value = small_data_value(spec.diameter, spec.n, psi.sup_D2psi, psi.sup_Dpsi_boundary(spec))
    return value, bool(value < 1.0)


def boundary_gradient_bound(D, n, tau, sup_D2psi, sup_Dpsi_boundary):
    """``4 D (1 + tau)(n sup|D^2 psi| + 1) + sqrt(2) sup_{boundary}|D psi|``."""
    return 4.0 * D * (1.0 + tau) * (n * sup_D2psi + 1.0) + SQRT2 * sup_Dpsi_boundary


def boundary_gradients(state, psi: BoundaryData):
    """``|Df|`` at boundary cut points from one-sided second-order differences.

    Along the approach axis ``a`` the error ``e = f - psi`` vanishes at the
    cut point, so ``De = nu d_nu e`` and ``d_nu e = d_a e / nu_a``.  Only
    approaches with ``|nu_a| >= 1/sqrt(n)`` are used to keep that division
    well conditioned.  Returns ``(boundary index, |Df|)`` arrays.
    """
    g = state.grid
    if len(g.approach) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    b, p, a, s, far = g.approach.T
    nu = g.bd_normal[b - g.n_lattice]
    nu_a = nu[np.arange(len(a)), a]
    use = np.abs(nu_a) >= 1.0 / math.sqrt(g.n) - 1e-12
    b, p, a, s, far, nu, nu_a = b[use], p[use], a[use], s[use], far[use], nu[use], nu_a[use]
    th1, th2 = g.approach_arms[use].T
    d1 = th1 * g.h
    d2 = (th1 + th2) * g.h
    psi_v = psi.value(g.coords)
    e = state.V - psi_v
    e1, e2 = e[p], e[far]
    inward = (d2 / (d1 * (d2 - d1)))[:, None] * e1 - (d1 / (d2 * (d2 - d1)))[:, None] * e2
    d_a = -s[:, None] * inward
    d_nu = d_a / nu_a[:, None]
    Df = psi.gradient(g.coords[b]) + nu[:, :, None] * d_nu[:, None, :]
    return b, np.linalg.norm(Df, axis=(1, 2))


@dataclass(frozen=True)
class GradientReport:
    observed: float
    bound: float
    ok: bool


def boundary_gradient_monitor(state, psi, tau, tol=1e-10) -> GradientReport:
    g = state.grid
    _, vals = boundary_gradients(state, psi)
    observed = float(vals.max()) if len(vals) else 0.0
    bound = boundary_gradient_bound(g.spec.diameter, g.n, tau, psi.sup_D2psi,
                                    psi.sup_Dpsi_boundary(g.spec))
    return GradientReport(observed, bound, observed <= bound + tol * (1 + bound))


@dataclass(frozen=True)
class MaxPrincipleReport:
    t: float
    fbar_sup: np.ndarray
    fbar_bound: np.ndarray
    f_sup: np.ndarray
    f_bound: np.ndarray
    margin: np.ndarray      # per component, min over both inequalities
    ok: np.ndarray

    @property
    def all_ok(self) -> bool:
        return bool(np.all(self.ok))

    def raise_if_violated(self):
        if not self.all_ok:
            raise MonitorViolation(
                f"maximum principle violated at t={self.t}: margins {self.margin.tolist()}",
                record=self,
            )


def max_principle_monitor(state, psi, tol=1e-10, sup_psi=None) -> MaxPrincipleReport:
    """Both sup bounds for ``f - t w`` and ``f``, componentwise.

    ``sup |f - tw| <= max(sup|psi|, sup_boundary |psi - tw|)`` and
    ``|f| <= sup|psi| + 2|w| t``; the boundary sup over ``(0, t)`` is the
    larger of its endpoint values because ``psi`` is static.
    """
    g = state.grid
    t, w = state.t, state.w
    if sup_psi is None:
        sup_psi = psi.sup_abs(g.spec, g.coords)
    f = state.V
    fbar = np.abs(f - t * w).max(axis=0)
    psi_b = psi.value(g.boundary_coords)
    bd = np.maximum(np.abs(psi_b).max(axis=0), np.abs(psi_b - t * w).max(axis=0))
    rhs1 = np.maximum(sup_psi, bd)
    fs = np.abs(f).max(axis=0)
    rhs2 = sup_psi + 2 * np.abs(w) * t
    m1 = rhs1 - fbar
    m2 = rhs2 - fs
    scale = np.maximum.reduce([rhs1, rhs2, fbar, fs])
    ok = (m1 >= -tol * (1 + scale)) & (m2 >= -tol * (1 + scale))
    return MaxPrincipleReport(t, fbar, rhs1, fs, rhs2, np.minimum(m1, m2), ok)


@dataclass(frozen=True)
class BarrierReport:
    point: np.ndarray
    alpha: int
    K: float
    mu: float
    key2_lhs: float
    key2_rhs: float
    requirement_ok: bool
    S_upper: float = math.nan
    S_lower: float = math.nan
    op_upper: float = math.nan
    op_lower: float = math.nan
    status: str = "requirement-failed"

    @property
    def margin(self) -> float:
        if not self.requirement_ok:
            return math.nan
        return min(self.S_upper, self.S_lower, self.op_upper, self.op_lower)


def barrier_check(state, psi: BoundaryData, p, alpha: int = 0, tau: float = 0.0,
                  mu_K: float | None = None, tol: float = 1e-8) -> BarrierReport:
    """Upper and lower log barriers anchored at the boundary point ``p``.

    With ``d(x) = <p - x, nu_out(p)>`` (distance to the supporting
    hyperplane), ``K = 1/D`` and ``mu K = 4 D (1 + tau)(n sup|D^2 psi| + 1)``,
    the functions ``mu log(1 + K d) -+ (f - psi)`` and their discrete
    ``(d_t - L)`` images must be non-negative.  When ``mu_K`` is overridden
    so that ``mu K^2 / ((1 + K D)^2 (1 + tau)) >= n sup|D^2 psi| + 1`` fails,
    the margins are not evaluated and the status is ``requirement-failed``.
    """
    g = state.grid
    spec = g.spec
    p = spec.require_boundary_point(np.asarray(p, float))
    if not 0 <= alpha < state.V.shape[1]:
        raise InvalidParameterError("component index out of range")
    D, n = spec.diameter, spec.n
    s2 = psi.sup_D2psi
    K = 1.0 / D
    muK = 4.0 * D * (1.0 + tau) * (n * s2 + 1.0) if mu_K is None else float(mu_K)
    mu = muK / K
    lhs = mu * K**2 / ((1 + K * D) ** 2 * (1 + tau))
    rhs = n * s2 + 1.0
    req = lhs >= rhs * (1 - 1e-12)
    if not req:
        return BarrierReport(p, alpha, K, mu, lhs, rhs, False)
    nu = spec.outward_normal(p)
    d = (p - g.coords) @ nu
    logb = np.log1p(K * np.maximum(d, 0.0))
    psi_v = psi.value(g.coords)
    diff = state.V[:, alpha] - psi_v[:, alpha]
    S_up = mu * logb - diff
    S_lo = mu * logb + diff
    A, L = g.n_active, g.n_lattice
    D1 = kernels.grad(state.V, g.nb, g.arms, g.h, L)
    G = kernels.inverse_metric(D1, A)

    def Lh(T):
        T = np.ascontiguousarray(T.reshape(len(T), 1))
        return kernels.second_form(T, kernels.grad(T, g.nb, g.arms, g.h, L), G,
                                   g.nb, g.arms, g.h, A, L)[:, 0]

    L_log = Lh(logb)
    L_psi = Lh(psi_v[:, alpha])
    wa = state.w[alpha]
    op_up = -wa - mu * L_log - L_psi
    op_lo = wa - mu * L_log + L_psi
    vals = (float(S_up.min()), float(S_lo.min()), float(op_up.min()), float(op_lo.min()))
    status = "ok" if min(vals) >= -tol else "violated"
    return BarrierReport(p, alpha, K, mu, lhs, rhs, True, *vals, status=status)


@dataclass(frozen=True)
class BalanceReport:
    residual: float
    relative: float
    V0: float
    weighted: bool


def volume_balance(diagnostics, weighted: bool = False) -> BalanceReport:
    """``max_t |V(t) - V(0) + int_0^t int |Hvec + W^perp|^2|``.

    ``weighted=False`` uses ``V = int sqrt(g) dx`` with plain dissipation;
    ``weighted=True`` uses ``V = int e^{-S} sqrt(g) dx`` with dissipation
    against ``dm``.
    """
    if weighted:
        V = np.array([r.area_weighted for r in diagnostics.records])
        Q = np.array([r.dissipation_weighted for r in diagnostics.records])
    else:
        V = np.array([r.area for r in diagnostics.records])
        Q = np.array([r.dissipation for r in diagnostics.records])
    res = float(np.max(np.abs(V - V[0] + Q)))
    return BalanceReport(res, res / V[0], float(V[0]), weighted)
