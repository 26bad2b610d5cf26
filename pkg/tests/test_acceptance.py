"""Acceptance criteria 1-14; each test prints one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from translator_lab import analysis as an
from translator_lab import flow
from translator_lab import geometry as geo
from translator_lab import solitons as so

from oracles import grim_reaper_dirichlet, rotational_shooting

GR = so.GrimReaper()
E2 = np.array([0.0, 1.0])


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return emit


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _run_1d(h):
    cfg = flow.FlowConfig(h=h, sigma=1.0, T_max=50.0, tol_steady=1e-8, record_every=2000,
                          barrier_points=((-1.0,), (1.0,)), strict=False)
    return flow.run(flow.interval(-1, 1), flow.BoundaryData.zero(), [1.0], cfg)


@pytest.fixture(scope="module")
def run4():
    (state, diag), secs = _timed(lambda: _run_1d(1 / 200))
    return state, diag, secs


@pytest.fixture(scope="module")
def run5():
    cfg = flow.FlowConfig(h=1 / 128, sigma=1.0, T_max=20.0, tol_steady=1e-8, record_every=5000,
                          strict=False)
    (out, secs) = _timed(lambda: flow.run(flow.disc([0, 0], 0.4), flow.BoundaryData.zero(2, 1), [1.0], cfg))
    return out[0], out[1], secs


def test_c01_soliton_identities(report):
    rep, secs = _timed(lambda: so.model_verify(GR, samples=10_000, tol=1e-10))
    c = rep.checks
    worst = max(c["soliton_residual"], c["pythagoras"], c["drift_laplacian"])
    ok = rep.samples == 10_000 and worst <= 1e-10 and secs < 5
    assert report(1, ok, f"max residual {worst:.2e} (<= 1e-10), {secs:.2f} s (< 5 s)")


def test_c02_curvature_identity_order(report):
    def go():
        jac, dh = [], []
        for h in (2e-3, 1e-3):
            axes = [np.linspace(-1, 1, int(round(2 / h)) + 1)]
            p = geo.sample_patch(lambda x: so.grim_reaper_jet(x[..., 0]), axes)
            jac.append(geo.jacobi_normal_residual(p, E2).max_abs())
            dh.append(float(np.max(np.abs(geo.deltaH_residual(p)))))
        return math.log2(jac[0] / jac[1]), math.log2(dh[0] / dh[1])

    (pj, pd), secs = _timed(go)
    ok = pj >= 1.9 and pd >= 1.9 and secs < 30
    assert report(2, ok, f"order Jacobi {pj:.3f}, deltaH {pd:.3f} (>= 1.9), {secs:.2f} s (< 30 s)")


def test_c03_bowl_oracle(report):
    def go():
        p = so.bowl_profile(2)
        r, res = p.ode_residual()
        return p, r, float(np.max(np.abs(res)))

    (p, r, res), secs = _timed(go)
    u01 = float(p.evaluate(np.array([0.1]))[0][0])
    near = abs(u01 + 0.1**2 / 4)
    ok = r[0] <= p.r_series + 1e-15 and r[-1] >= 10 and res <= 1e-8 and near <= 1e-6 and secs < 10
    assert report(3, ok, f"ODE residual {res:.2e} on [{r[0]}, {r[-1]}] (<= 1e-8), "
                         f"|u(0.1)+r^2/4| {near:.2e} (<= 1e-6), {secs:.2f} s (< 10 s)")


def test_c04_flow_closed_form(run4, report):
    state, diag, secs = run4
    L = state.grid.n_lattice
    x = state.grid.coords[:L, 0]
    err = float(np.max(np.abs(state.V[:L, 0] - grim_reaper_dirichlet(x))))
    u0 = float(state.V[np.argmin(np.abs(x)), 0])
    res = diag.records[-1].steady_res
    ok = (diag.status == "steady" and err <= 5e-4 and abs(u0 - 0.6156) <= 5e-4 and res < 1e-8
          and secs < 60)
    assert report(4, ok, f"sup error {err:.2e} (<= 5e-4), u(0) {u0:.5f} (0.6156 +- 5e-4), "
                         f"residual {res:.3e} (< 1e-8), {secs:.1f} s (< 60 s)")


def test_c05_flow_disc_oracle(run5, report):
    state, diag, secs = run5
    L = state.grid.n_lattice
    r = np.linalg.norm(state.grid.coords[:L], axis=1)
    err = float(np.max(np.abs(state.V[:L, 0] - rotational_shooting(2, 0.4)(r))))
    ok = diag.status == "steady" and err <= 1e-3 and secs < 300
    assert report(5, ok, f"sup error {err:.2e} (<= 1e-3), {secs:.1f} s (< 300 s)")


def test_c06_maximum_principles(run4, run5, report):
    worst, all_ok = math.inf, True
    for _, diag, _ in (run4, run5):
        for rec in diag.records:
            mp = rec.max_principle
            worst = min(worst, float(np.min(mp.margin)))
            all_ok &= bool(np.all(mp.ok))
    ok = all_ok and worst >= -1e-10
    assert report(6, ok, f"min margin {worst:.3e} over all records (>= -1e-10 scale)")


def test_c07_boundary_gradient(run4, run5, report):
    over = -math.inf
    for _, diag, _ in (run4, run5):
        for rec in diag.records:
            over = max(over, rec.sup_bdry_grad - rec.gradient_bound)
    formula = all(rec.gradient_bound == pytest.approx(8 * (1 + rec.tau), rel=1e-14)
                  for rec in run4[1].records)
    ok = over <= 0 and formula
    assert report(7, ok, f"max(sup|Df| - bound) {over:.3f} (<= 0), criterion-4 bound = 8(1+tau): {formula}")


def test_c08_barrier_margins(run4, report):
    _, diag, _ = run4
    margins, req = [], True
    for rec in diag.records:
        assert len(rec.barriers) == 2
        for b in rec.barriers:
            req &= b.requirement_ok
            margins.append(b.margin)
    worst = min(margins)
    ok = req and worst >= -1e-8
    assert report(8, ok, f"min barrier margin {worst:.3e} (>= -1e-8), both endpoints")


def test_c09_smallness(report):
    a = flow.check_small_data_condition(flow.disc([0, 0], 0.025), flow.BoundaryData.zero(2, 1))
    b = flow.check_small_data_condition(flow.disc([0, 0], 0.1), flow.BoundaryData.zero(2, 1))
    ok = a == (0.4, True) and b == (1.6, False)
    assert report(9, ok, f"D=0.05 -> {a}, D=0.2 -> {b}")


def test_c10_volume_balance(run4, report):
    coarse = _run_1d(1 / 100)[1]
    lit = flow.volume_balance(run4[1])
    lit_c = flow.volume_balance(coarse)
    wt = flow.volume_balance(run4[1], weighted=True)
    ok = lit.relative <= 5e-3 and lit.residual < lit_c.residual
    assert report(10, ok, f"relative imbalance {lit.relative:.3e} (<= 5e-3), h=1/100 {lit_c.relative:.3e}; "
                          f"weighted form {wt.relative:.2e}")


def test_c11_stability(report):
    box = so.Box([-1.0], [1.0])
    m1 = an.build_weighted_mesh(GR, box, 0.01)
    val, cond = an.stability_condition(m1, 1.0)
    l1 = an.drift_first_eigenvalue(m1).lambda1
    l2 = an.drift_first_eigenvalue(an.build_weighted_mesh(GR, box, 0.005)).lambda1
    ok = cond and abs(val) <= 1e-12 and l1 >= -1e-6 and abs(l1 - l2) <= 1e-3
    assert report(11, ok, f"condition {cond} sup {val:.1e}, lambda1 {l1:.6f} (>= -1e-6), "
                          f"refinement change {abs(l1 - l2):.2e} (<= 1e-3)")


def test_c12_volume_growth(report):
    def go():
        hp = an.weighted_volume_growth(so.Hyperplane(1), 2.0, 1.0, 4.0)
        tl = an.weighted_volume_growth(so.TiltedGrimReaper(math.pi / 4), 4.0, 2.0, 5.0)
        return hp, tl

    (hp, tl), secs = _timed(go)
    ok = (hp.eps == 1.0 and hp.min_ratio >= 1 - 1e-3 and tl.eps == pytest.approx(1.0, abs=1e-12)
          and tl.min_ratio >= 1 - 1e-2 and secs < 120)
    assert report(12, ok, f"hyperplane min ratio {hp.min_ratio:.5f} (>= 0.999), tilted "
                          f"{tl.min_ratio:.5f} (>= 0.99), {secs:.1f} s (< 120 s)")


def test_c13_divergence_identity(report):
    m = an.build_weighted_mesh(GR, so.Box([-1.0], [1.0]), 1e-3)
    d = an.divergence_identity_check(m, m.S)
    ok = abs(d.lhs + 2 * math.tan(1.0)) <= 1e-3 and d.residual <= 1e-3
    assert report(13, ok, f"LHS {d.lhs:.6f} (-2 tan 1 = {-2 * math.tan(1.0):.6f}), |LHS-RHS| {d.residual:.2e}")


def test_c14_scans(report):
    wins = [so.Box([-(math.pi / 2 - 2.0**-m)], [math.pi / 2 - 2.0**-m]) for m in range(1, 12)]
    vals = [e.inf_H2 for e in so.inf_H_scan(GR, wins)]
    mono = all(b <= a for a, b in zip(vals, vals[1:]))
    models = [GR, so.TiltedGrimReaper(math.pi / 4), so.TiltedGrimReaper(1.47), so.Hyperplane(1),
              so.Hyperplane(2), so.Bowl(n=2)]
    bd = all(so.min_S_window(m, m.verification_window()).on_boundary for m in models)
    ok = mono and vals[-1] <= 1e-3 and bd
    assert report(14, ok, f"inf H^2 non-increasing {mono}, last {vals[-1]:.2e} (<= 1e-3), "
                          f"min S on boundary for all windows {bd}")
