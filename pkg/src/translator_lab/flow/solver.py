"""Explicit Euler solver for ``f_t = g^ij f_ij + w`` with Dirichlet data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from ..errors import BlowUpError, InvalidParameterError, MonitorViolation
from . import kernels
from . import monitors as mon
from .domain import BoundaryData, DomainSpec
from .grid import Grid, discretize_domain


@dataclass
class FlowState:
    grid: Grid
    V: np.ndarray       # (L + B, k) values on [active | slaved | boundary]
    t: float
    w: np.ndarray
    steps: int = 0

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def f(self):
        """Values at the lattice nodes."""
        return self.V[: self.grid.n_lattice]

    @property
    def k(self) -> int:
        return self.V.shape[1]

    def copy(self):
        return replace(self, V=self.V.copy(), w=self.w.copy())


@dataclass(frozen=True)
class FlowConfig:
    h: float = 0.01
    sigma: float = 0.5
    T_max: float = 1.0
    tol_steady: float = 1e-8
    record_every: int = 1000
    dt: float | None = None
    theta_min: float = 0.5
    blowup_bound: float = 1e6
    barrier_points: tuple | None = None
    barrier_mu_K: float | None = None
    tol_barrier: float = 1e-8
    tol_monitor: float = 1e-10
    strict: bool = True
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not self.h > 0:
            raise InvalidParameterError("h must be positive")
        if not 0 < self.sigma <= 1:
            raise InvalidParameterError("sigma must lie in (0, 1]")
        if not self.T_max >= 0:
            raise InvalidParameterError("T_max must be non-negative")
        if self.record_every < 1:
            raise InvalidParameterError("record_every must be >= 1")
        if self.dt is not None and not self.dt > 0:
            raise InvalidParameterError("dt override must be positive")


@dataclass(frozen=True)
class Record:
    step: int
    t: float
    sup_f: np.ndarray
    sup_fbar: np.ndarray
    sup_bdry_grad: float
    steady_res: float
    area: float
    area_weighted: float
    dissipation: float
    dissipation_weighted: float
    tau: float
    gradient_bound: float
    barrier_margin: float
    max_principle: mon.MaxPrincipleReport
    metric_ok: bool
    barriers: tuple = ()


@dataclass
class Diagnostics:
    records: list = field(default_factory=list)
    status: str = "running"
    violations: list = field(default_factory=list)

    CSV_HEADER = "t,sup_f,sup_fbar,sup_bdry_grad,steady_res,area,dissipation,barrier_margin"

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def rows(self):
        for r in self.records:
            yield (r.t, float(np.max(r.sup_f)), float(np.max(r.sup_fbar)), r.sup_bdry_grad,
                   r.steady_res, r.area, r.dissipation, r.barrier_margin)


def cfl_timestep(state_or_grid, sigma: float = 0.5) -> float:
    """``sigma h^2 / (4 n^2)``."""
    if not 0 < sigma <= 1:
        raise InvalidParameterError("sigma must lie in (0, 1]")
    g = state_or_grid.grid if isinstance(state_or_grid, FlowState) else state_or_grid
    return sigma * g.h**2 / (4 * g.n**2)


def initial_state(grid: Grid, psi: BoundaryData, w, f0: Callable | None = None) -> FlowState:
    """Field equal to ``psi`` (or ``f0`` at lattice nodes) with boundary ``psi``."""
    w = np.atleast_1d(np.asarray(w, float))
    if w.shape != (psi.k,):
        raise InvalidParameterError(f"w must have {psi.k} components")
    if np.linalg.norm(w) > 1 + 1e-12:
        raise InvalidParameterError("|w| must not exceed 1")
    if psi.n != grid.n:
        raise InvalidParameterError("psi dimension does not match the domain")
    V = psi.value(grid.coords).reshape(grid.size, psi.k).copy()
    if f0 is not None:
        L = grid.n_lattice
        V[:L] = np.asarray(f0(grid.lattice_coords), float).reshape(L, psi.k)
    kernels.apply_slaves(V, grid.n_active, grid.slave_opp, grid.slave_bd, grid.slave_wopp)
    return FlowState(grid=grid, V=V, t=0.0, w=w)


def _check_finite(state):
    if not np.all(np.isfinite(state.V)):
        raise BlowUpError("non-finite field", state=state, step=state.steps)


def _evaluate(state):
    g = state.grid
    return kernels.operator(state.V, g.nb, g.arms, g.h, g.n_active, g.n_lattice, state.w)


def spatial_operator(state: FlowState):
    """``g^ij D_ij f + w`` at the active nodes, shape ``(n_active, k)``."""
    _check_finite(state)
    out, _, _ = _evaluate(state)
    return out


def step(state: FlowState, dt: float, allow_unstable: bool = False) -> FlowState:
    """One explicit Euler step; returns a new state."""
    if not dt > 0:
        raise InvalidParameterError("dt must be positive")
    if not allow_unstable and dt > cfl_timestep(state, 1.0) * (1 + 1e-12):
        raise InvalidParameterError(f"dt = {dt} exceeds the CFL limit {cfl_timestep(state, 1.0)}")
    out = spatial_operator(state)
    new = state.copy()
    g = state.grid
    new.V[: g.n_active] += dt * out
    kernels.apply_slaves(new.V, g.n_active, g.slave_opp, g.slave_bd, g.slave_wopp)
    new.t = state.t + dt
    new.steps = state.steps + 1
    _check_finite(new)
    return new


class _Recorder:
    """Evaluates every monitor on a state and accumulates running maxima."""

    def __init__(self, state, psi, config: FlowConfig):
        g = state.grid
        self.psi = psi
        self.config = config
        # with f0 != psi the maximum principle starts from sup|f0|
        self.sup_psi = np.maximum(psi.sup_abs(g.spec, g.coords), np.abs(state.V).max(axis=0))
        self.sup_Dpsi_b = psi.sup_Dpsi_boundary(g.spec)
        pts = config.barrier_points
        self.barrier_points = [g.spec.default_boundary_point()] if pts is None else [
            np.asarray(p, float) for p in pts]
        for p in self.barrier_points:
            g.spec.require_boundary_point(p)
        self.tau = 0.0
        self.diss = 0.0
        self.diss_w = 0.0

    def area(self, state, D, bidx, bgrad_vec):
        g = state.grid
        L = g.n_lattice
        gm = np.eye(g.n) + np.einsum("pic,pjc->pij", D, D)
        sq = np.sqrt(np.linalg.det(gm))
        S = state.V @ state.w
        V = float(np.dot(g.weights[:L], sq))
        Vw = float(np.dot(g.weights[:L], sq * np.exp(-S[:L])))
        if g.n == 1 and g.n_boundary:
            sb = np.sqrt(1.0 + bgrad_vec)
            wb = g.weights[bidx]
            V += float(np.dot(wb, sb))
            Vw += float(np.dot(wb, sb * np.exp(-S[bidx])))
        return V, Vw

    def record(self, state) -> Record:
        g = state.grid
        cfg = self.config
        out, D, G = _evaluate(state)
        steady = float(np.abs(out).max()) if len(out) else 0.0
        bidx, bvals = mon.boundary_gradients(state, self.psi)
        sup_bg = float(bvals.max()) if len(bvals) else 0.0
        self.tau = max(self.tau, float(np.max(np.sum(D**2, axis=(1, 2)), initial=0.0)),
                       sup_bg**2)
        area, area_w = self.area(state, D, bidx, bvals**2)
        bound = mon.boundary_gradient_bound(g.spec.diameter, g.n, self.tau,
                                            self.psi.sup_D2psi, self.sup_Dpsi_b)
        mp = mon.max_principle_monitor(state, self.psi, tol=cfg.tol_monitor, sup_psi=self.sup_psi)
        eig = np.linalg.eigvalsh(G) if len(G) else np.ones((1, g.n))
        metric_ok = bool(eig.min() >= 1 / (1 + self.tau) - 1e-12 and eig.max() <= 1 + 1e-12)
        barriers = []
        for p in self.barrier_points:
            for a in range(state.k):
                barriers.append(mon.barrier_check(state, self.psi, p, a, tau=self.tau,
                                                  mu_K=cfg.barrier_mu_K, tol=cfg.tol_barrier))
        margins = [b.margin for b in barriers if b.requirement_ok]
        return Record(
            step=state.steps, t=state.t,
            sup_f=np.abs(state.V).max(axis=0), sup_fbar=np.abs(state.V - state.t * state.w).max(axis=0),
            sup_bdry_grad=sup_bg, steady_res=steady, area=area, area_weighted=area_w,
            dissipation=self.diss, dissipation_weighted=self.diss_w, tau=self.tau,
            gradient_bound=bound, barrier_margin=min(margins) if margins else math.nan,
            max_principle=mp, metric_ok=metric_ok, barriers=tuple(barriers),
        )

    def violations(self, rec: Record):
        out = []
        if not rec.max_principle.all_ok:
            out.append("max_principle")
        if rec.sup_bdry_grad > rec.gradient_bound + 1e-10 * (1 + rec.gradient_bound):
            out.append("boundary_gradient")
        if not rec.metric_ok:
            out.append("metric_sandwich")
        if any(b.status == "violated" for b in rec.barriers):
            out.append("barrier")
        return out


def _pick_kernel(n, k):
    if k == 1 and n == 1:
        return kernels.advance_1d
    if k == 1 and n == 2:
        return kernels.advance_2d
    return kernels.advance


def run(spec: DomainSpec, psi: BoundaryData, w, config: FlowConfig = FlowConfig(),
        f0: Callable | None = None, grid: Grid | None = None):
    """Advance to ``T_max`` or until the steady residual drops below ``tol_steady``.

    Returns ``(state, diagnostics)``.  Raises ``BlowUpError`` on divergence and
    ``MonitorViolation`` (when ``config.strict``) if a monitored bound fails.
    """
    grid = discretize_domain(spec, config.h, config.theta_min) if grid is None else grid
    state = initial_state(grid, psi, w, f0)
    _check_finite(state)
    dt = config.dt if config.dt is not None else cfl_timestep(grid, config.sigma)
    rec = _Recorder(state, psi, config)
    diag = Diagnostics()

    def push():
        r = rec.record(state)
        diag.records.append(r)
        bad = rec.violations(r)
        if bad:
            diag.violations.append((r.step, bad))
            if config.strict:
                diag.status = "violation"
                raise MonitorViolation(f"{', '.join(bad)} violated at t={r.t:.6g}", record=r)
        return r

    r = push()
    if r.steady_res < config.tol_steady:
        diag.status = "steady"
        return state, diag
    g = grid
    while True:
        remaining = config.T_max - state.t
        n_left = int(math.floor(remaining / dt * (1 + 1e-12)))
        n_left = min(n_left, config.max_steps - state.steps)
        if n_left <= 0:
            diag.status = "t_max"
            break
        chunk = min(config.record_every, n_left)
        kernel = _pick_kernel(g.n, state.k)
        taken, status, res, dq, dqw = kernel(
            state.V, chunk, dt, g.nb, g.arms, g.h, g.n_active, g.n_lattice, state.w,
            g.slave_opp, g.slave_bd, g.slave_wopp, g.weights, config.tol_steady,
            config.blowup_bound,
        )
        state.steps += taken
        state.t = state.steps * dt
        rec.diss += dq
        rec.diss_w += dqw
        if status == 2:
            diag.status = "blow-up"
            raise BlowUpError(f"solution blew up after {state.steps} steps (t={state.t:.4g})",
                              state=state, step=state.steps)
        push()
        if status == 1:
            diag.status = "steady"
            break
    return state, diag
