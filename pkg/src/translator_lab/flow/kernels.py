"""Numba kernels on the flattened ``[active | slaved | boundary]`` layout."""

import math

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _metric_entry(D, p, i, j):
    s = 1.0 if i == j else 0.0
    for c in range(D.shape[2]):
        s += D[p, i, c] * D[p, j, c]
    return s


@njit(cache=True)
def grad(V, nb, arms, h, L):
    """Three-point (possibly non-uniform) first differences at lattice nodes."""
    D = np.empty((L, nb.shape[1], V.shape[1]))
    grad_into(V, nb, arms, h, L, D)
    return D


@njit(cache=True)
def grad_into(V, nb, arms, h, L, D):
    n = nb.shape[1]
    k = V.shape[1]
    for p in range(L):
        for a in range(n):
            im = nb[p, a, 0]
            ip = nb[p, a, 1]
            am = arms[p, a, 0] * h
            ap = arms[p, a, 1] * h
            den = am * ap * (am + ap)
            for c in range(k):
                D[p, a, c] = (am * am * (V[ip, c] - V[p, c]) + ap * ap * (V[p, c] - V[im, c])) / den


@njit(cache=True)
def inverse_metric(D, A):
    """``g^{-1}`` for ``g = I + D D^T`` at the first ``A`` nodes."""
    G = np.empty((A, D.shape[1], D.shape[1]))
    inverse_metric_into(D, A, G)
    return G


@njit(cache=True)
def inverse_metric_into(D, A, G):
    n = D.shape[1]
    for p in range(A):
        if n == 1:
            G[p, 0, 0] = 1.0 / _metric_entry(D, p, 0, 0)
        elif n == 2:
            a, b, d = _metric_entry(D, p, 0, 0), _metric_entry(D, p, 0, 1), _metric_entry(D, p, 1, 1)
            det = a * d - b * b
            G[p, 0, 0] = d / det
            G[p, 1, 1] = a / det
            G[p, 0, 1] = -b / det
            G[p, 1, 0] = -b / det
        else:
            a, b, c = _metric_entry(D, p, 0, 0), _metric_entry(D, p, 0, 1), _metric_entry(D, p, 0, 2)
            d, e, f = _metric_entry(D, p, 1, 1), _metric_entry(D, p, 1, 2), _metric_entry(D, p, 2, 2)
            c00, c01, c02 = d * f - e * e, c * e - b * f, b * e - c * d
            c11, c12, c22 = a * f - c * c, b * c - a * e, a * d - b * b
            det = a * c00 + b * c01 + c * c02
            G[p, 0, 0] = c00 / det
            G[p, 0, 1] = G[p, 1, 0] = c01 / det
            G[p, 0, 2] = G[p, 2, 0] = c02 / det
            G[p, 1, 1] = c11 / det
            G[p, 1, 2] = G[p, 2, 1] = c12 / det
            G[p, 2, 2] = c22 / det


@njit(cache=True, inline="always")
def _mixed_one(Dt, nb, p, a, b, c, h, L):
    qm = nb[p, b, 0]
    qp = nb[p, b, 1]
    if qm < L and qp < L:
        return (Dt[qp, a, c] - Dt[qm, a, c]) / (2.0 * h), True
    if qp < L:
        return (Dt[qp, a, c] - Dt[p, a, c]) / h, True
    if qm < L:
        return (Dt[p, a, c] - Dt[qm, a, c]) / h, True
    return 0.0, False


@njit(cache=True)
def second_form(T, Dt, G, nb, arms, h, A, L):
    """``g^{ij} D_ij T`` at active nodes.

    Diagonal terms use Shortley-Weller second differences; mixed terms
    differentiate the centered first derivative along the other axis,
    symmetrized over the axis pair.
    """
    out = np.empty((A, T.shape[1]))
    second_form_into(T, Dt, G, nb, arms, h, A, L, out)
    return out


@njit(cache=True)
def second_form_into(T, Dt, G, nb, arms, h, A, L, out):
    n = nb.shape[1]
    k = T.shape[1]
    for p in range(A):
        for c in range(k):
            acc = 0.0
            for a in range(n):
                im = nb[p, a, 0]
                ip = nb[p, a, 1]
                am = arms[p, a, 0] * h
                ap = arms[p, a, 1] * h
                d2 = 2.0 * (am * T[ip, c] + ap * T[im, c] - (am + ap) * T[p, c]) / (am * ap * (am + ap))
                acc += G[p, a, a] * d2
            for a in range(n):
                for b in range(a + 1, n):
                    m1, ok1 = _mixed_one(Dt, nb, p, a, b, c, h, L)
                    m2, ok2 = _mixed_one(Dt, nb, p, b, a, c, h, L)
                    if ok1 and ok2:
                        m = 0.5 * (m1 + m2)
                    elif ok1:
                        m = m1
                    elif ok2:
                        m = m2
                    else:
                        m = 0.0
                    acc += 2.0 * G[p, a, b] * m
            out[p, c] = acc


@njit(cache=True)
def apply_slaves(V, A, opp, bd, wopp):
    for s in range(opp.shape[0]):
        i = A + s
        for c in range(V.shape[1]):
            V[i, c] = wopp[s] * V[opp[s], c] + (1.0 - wopp[s]) * V[bd[s], c]


@njit(cache=True)
def operator(V, nb, arms, h, A, L, w):
    D = grad(V, nb, arms, h, L)
    G = inverse_metric(D, A)
    out = second_form(V, D, G, nb, arms, h, A, L)
    for p in range(A):
        for c in range(out.shape[1]):
            out[p, c] += w[c]
    return out, D, G


@njit(cache=True, inline="always")
def _det_metric(D, p):
    n = D.shape[1]
    if n == 1:
        return _metric_entry(D, p, 0, 0)
    if n == 2:
        return _metric_entry(D, p, 0, 0) * _metric_entry(D, p, 1, 1) - _metric_entry(D, p, 0, 1) ** 2
    a, b, c = _metric_entry(D, p, 0, 0), _metric_entry(D, p, 0, 1), _metric_entry(D, p, 0, 2)
    d, e, f = _metric_entry(D, p, 1, 1), _metric_entry(D, p, 1, 2), _metric_entry(D, p, 2, 2)
    return a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c)


@njit(cache=True, inline="always")
def _dissipation_at(out, D, G, V, w, p):
    """``|(0, v)^perp|^2 sqrt(g)`` and its ``e^{-S}``-weighted value at node ``p``."""
    n = D.shape[1]
    k = D.shape[2]
    if n == 1 and k == 1:
        v = out[p, 0]
        d = D[p, 0, 0]
        dens = v * v * G[p, 0, 0] * math.sqrt(1.0 + d * d)
        return dens, dens * math.exp(-V[p, 0] * w[0])
    vv = 0.0
    for c in range(k):
        vv += out[p, c] * out[p, c]
    tan = 0.0
    for i in range(n):
        ti = 0.0
        for c in range(k):
            ti += D[p, i, c] * out[p, c]
        for j in range(n):
            tj = 0.0
            for c in range(k):
                tj += D[p, j, c] * out[p, c]
            tan += G[p, i, j] * ti * tj
    S = 0.0
    for c in range(k):
        S += V[p, c] * w[c]
    dens = (vv - tan) * math.sqrt(_det_metric(D, p))
    return dens, dens * math.exp(-S)


@njit(cache=True)
def dissipation_density(out, D, G, V, w, A):
    plain = np.empty(A)
    weighted = np.empty(A)
    for p in range(A):
        plain[p], weighted[p] = _dissipation_at(out, D, G, V, w, p)
    return plain, weighted


@njit(cache=True)
def advance(V, nsteps, dt, nb, arms, h, A, L, w, opp, bd, wopp, weights,
            tol_steady, bound):
    """Run up to ``nsteps`` explicit Euler steps in place.

    Returns ``(steps_taken, status, last_residual, diss, diss_weighted)`` with
    status 0 = ran all steps, 1 = steady (residual below ``tol_steady`` before
    a step), 2 = blow-up (non-finite or above ``bound``).
    """
    diss = 0.0
    diss_w = 0.0
    res = np.inf
    k = V.shape[1]
    n = nb.shape[1]
    D = np.empty((L, n, k))
    G = np.empty((A, n, n))
    out = np.empty((A, k))
    for s in range(nsteps):
        grad_into(V, nb, arms, h, L, D)
        inverse_metric_into(D, A, G)
        second_form_into(V, D, G, nb, arms, h, A, L, out)
        for p in range(A):
            for c in range(k):
                out[p, c] += w[c]
        res = 0.0
        finite = True
        for p in range(A):
            for c in range(k):
                x = out[p, c]
                if not np.isfinite(x):
                    finite = False
                elif abs(x) > res:
                    res = abs(x)
        if not finite:
            return s, 2, np.inf, diss, diss_w
        if res < tol_steady:
            return s, 1, res, diss, diss_w
        for p in range(A):
            a, b = _dissipation_at(out, D, G, V, w, p)
            diss += dt * weights[p] * a
            diss_w += dt * weights[p] * b
        top = 0.0
        for p in range(A):
            for c in range(k):
                V[p, c] += dt * out[p, c]
                x = V[p, c]
                if not np.isfinite(x):
                    top = np.inf
                elif abs(x) > top:
                    top = abs(x)
        apply_slaves(V, A, opp, bd, wopp)
        if top > bound:
            return s + 1, 2, res, diss, diss_w
    return nsteps, 0, res, diss, diss_w


@njit(cache=True)
def advance_1d(V, nsteps, dt, nb, arms, h, A, L, w, opp, bd, wopp, weights,
               tol_steady, bound):
    """Same contract as ``advance`` specialised to ``n = k = 1``."""
    diss = 0.0
    diss_w = 0.0
    res = np.inf
    w0 = w[0]
    out = np.empty(A)
    for s in range(nsteps):
        res = 0.0
        finite = True
        for p in range(A):
            im = nb[p, 0, 0]
            ip = nb[p, 0, 1]
            am = arms[p, 0, 0] * h
            ap = arms[p, 0, 1] * h
            den = am * ap * (am + ap)
            fm = V[im, 0]
            f0 = V[p, 0]
            fp = V[ip, 0]
            d = (am * am * (fp - f0) + ap * ap * (f0 - fm)) / den
            d2 = 2.0 * (am * fp + ap * fm - (am + ap) * f0) / den
            gi = 1.0 / (1.0 + d * d)
            v = gi * d2 + w0
            out[p] = v
            if not np.isfinite(v):
                finite = False
            elif abs(v) > res:
                res = abs(v)
            dens = v * v * gi * math.sqrt(1.0 + d * d)
            diss += dt * weights[p] * dens
            diss_w += dt * weights[p] * dens * math.exp(-f0 * w0)
        if not finite:
            return s, 2, np.inf, diss, diss_w
        if res < tol_steady:
            # the last sweep's dissipation belongs to a step that is not taken
            return s, 1, res, diss - dt * _diss_sweep_1d(V, out, nb, arms, h, A, weights, w0, False), \
                diss_w - dt * _diss_sweep_1d(V, out, nb, arms, h, A, weights, w0, True)
        top = 0.0
        for p in range(A):
            x = V[p, 0] + dt * out[p]
            V[p, 0] = x
            if not np.isfinite(x):
                top = np.inf
            elif abs(x) > top:
                top = abs(x)
        apply_slaves(V, A, opp, bd, wopp)
        if top > bound:
            return s + 1, 2, res, diss, diss_w
    return nsteps, 0, res, diss, diss_w


@njit(cache=True)
def _diss_sweep_1d(V, out, nb, arms, h, A, weights, w0, weighted):
    total = 0.0
    for p in range(A):
        im = nb[p, 0, 0]
        ip = nb[p, 0, 1]
        am = arms[p, 0, 0] * h
        ap = arms[p, 0, 1] * h
        d = (am * am * (V[ip, 0] - V[p, 0]) + ap * ap * (V[p, 0] - V[im, 0])) / (am * ap * (am + ap))
        v = out[p]
        dens = v * v / (1.0 + d * d) * math.sqrt(1.0 + d * d)
        if weighted:
            dens *= math.exp(-V[p, 0] * w0)
        total += weights[p] * dens
    return total


@njit(cache=True, inline="always")
def _mixed_scalar(Dq, nb, p, b, h, L):
    qm = nb[p, b, 0]
    qp = nb[p, b, 1]
    if qm < L and qp < L:
        return (Dq[qp] - Dq[qm]) / (2.0 * h), True
    if qp < L:
        return (Dq[qp] - Dq[p]) / h, True
    if qm < L:
        return (Dq[p] - Dq[qm]) / h, True
    return 0.0, False


@njit(cache=True)
def advance_2d(V, nsteps, dt, nb, arms, h, A, L, w, opp, bd, wopp, weights,
               tol_steady, bound):
    """Same contract as ``advance`` specialised to ``n = 2, k = 1``."""
    diss = 0.0
    diss_w = 0.0
    res = np.inf
    w0 = w[0]
    out = np.empty(A)
    dens = np.empty(A)
    Dx = np.empty(L)
    Dy = np.empty(L)
    for s in range(nsteps):
        for p in range(L):
            for a in range(2):
                am = arms[p, a, 0] * h
                ap = arms[p, a, 1] * h
                f0 = V[p, 0]
                d = (am * am * (V[nb[p, a, 1], 0] - f0) + ap * ap * (f0 - V[nb[p, a, 0], 0])) / (am * ap * (am + ap))
                if a == 0:
                    Dx[p] = d
                else:
                    Dy[p] = d
        res = 0.0
        finite = True
        for p in range(A):
            f0 = V[p, 0]
            am = arms[p, 0, 0] * h
            ap = arms[p, 0, 1] * h
            dxx = 2.0 * (am * V[nb[p, 0, 1], 0] + ap * V[nb[p, 0, 0], 0] - (am + ap) * f0) / (am * ap * (am + ap))
            am = arms[p, 1, 0] * h
            ap = arms[p, 1, 1] * h
            dyy = 2.0 * (am * V[nb[p, 1, 1], 0] + ap * V[nb[p, 1, 0], 0] - (am + ap) * f0) / (am * ap * (am + ap))
            m1, ok1 = _mixed_scalar(Dx, nb, p, 1, h, L)
            m2, ok2 = _mixed_scalar(Dy, nb, p, 0, h, L)
            if ok1 and ok2:
                m = 0.5 * (m1 + m2)
            elif ok1:
                m = m1
            elif ok2:
                m = m2
            else:
                m = 0.0
            px = Dx[p]
            py = Dy[p]
            g00 = 1.0 + px * px
            g11 = 1.0 + py * py
            g01 = px * py
            det = g00 * g11 - g01 * g01
            v = (g11 * dxx + g00 * dyy - 2.0 * g01 * m) / det + w0
            out[p] = v
            if not np.isfinite(v):
                finite = False
            elif abs(v) > res:
                res = abs(v)
            # normal part of (0, v): v^2 (1 - |p|^2 / (1 + |p|^2)) = v^2 / det
            dens[p] = v * v / det * math.sqrt(det)
        if not finite:
            return s, 2, np.inf, diss, diss_w
        if res < tol_steady:
            return s, 1, res, diss, diss_w
        for p in range(A):
            diss += dt * weights[p] * dens[p]
            diss_w += dt * weights[p] * dens[p] * math.exp(-V[p, 0] * w0)
        top = 0.0
        for p in range(A):
            x = V[p, 0] + dt * out[p]
            V[p, 0] = x
            if not np.isfinite(x):
                top = np.inf
            elif abs(x) > top:
                top = abs(x)
        apply_slaves(V, A, opp, bd, wopp)
        if top > bound:
            return s + 1, 2, res, diss, diss_w
    return nsteps, 0, res, diss, diss_w
