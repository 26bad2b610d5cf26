"""Lattice discretization with Shortley-Weller cut arms."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import ResolutionError
from .domain import DomainSpec


@dataclass(frozen=True)
class Grid:
    """Flattened node set of a discretized domain.

    The value vector is laid out as ``[active | slaved | boundary]``.
    ``nb[p, a, 0/1]`` index the minus/plus neighbour of lattice node ``p``
    along axis ``a`` and ``arms`` hold the corresponding distances in units of
    ``h`` (1 for lattice neighbours, in ``(0, 1]`` for boundary cut points).

    Slaved nodes sit closer than ``theta_min * h`` to the boundary; their value
    is the linear interpolant between the cut point and the opposite
    neighbour, which keeps the explicit step free of the ``1/theta`` stiffness
    of very short arms.
    """

    spec: DomainSpec
    h: float
    index: np.ndarray          # (L, n) integer lattice coordinates
    coords: np.ndarray         # (L + B, n)
    nb: np.ndarray             # (L, n, 2)
    arms: np.ndarray           # (L, n, 2)
    n_active: int
    n_lattice: int
    slave_opp: np.ndarray      # (L - A,)
    slave_bd: np.ndarray
    slave_wopp: np.ndarray     # interpolation weight of the opposite value
    bd_normal: np.ndarray      # (B, n) outward unit normals
    approach: np.ndarray       # (m, 5) int: boundary idx, node, axis, sign(+1/-1), far idx
    approach_arms: np.ndarray  # (m, 2): arm to boundary, arm node->far (units of h)
    weights: np.ndarray        # (L + B,) dual-cell volumes

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def n_boundary(self) -> int:
        return self.coords.shape[0] - self.n_lattice

    @property
    def size(self) -> int:
        return self.coords.shape[0]

    @property
    def lattice_coords(self):
        return self.coords[: self.n_lattice]

    @property
    def boundary_coords(self):
        return self.coords[self.n_lattice:]

    @property
    def n_interior(self) -> int:
        return self.n_lattice

    def slaved_indices(self):
        return np.arange(self.n_active, self.n_lattice)


def discretize_domain(spec: DomainSpec, h: float, theta_min: float = 0.5,
                      min_cells: int = 4) -> Grid:
    """Lattice points strictly inside the domain plus their boundary cut points.

    The lattice is anchored at the lower corner of a rectangle or at the
    center of a disc/ellipse.  ``h`` may be at most ``D / min_cells``.
    """
    D = spec.diameter
    if not h > 0 or h > D / min_cells * (1 + 1e-12):
        raise ResolutionError(f"h = {h} must satisfy 0 < h <= D/{min_cells} = {D / min_cells}")
    if not 0.0 <= theta_min < 1.0:
        raise ResolutionError("theta_min must lie in [0, 1)")
    shape = spec.shape
    n = spec.n
    anchor = shape.anchor
    lo, hi = shape.bbox()
    ranges = [range(int(np.floor((lo[a] - anchor[a]) / h)) - 1,
                    int(np.ceil((hi[a] - anchor[a]) / h)) + 2) for a in range(n)]
    cand = np.array(list(itertools.product(*ranges)), dtype=np.int64).reshape(-1, n)
    x = anchor + h * cand
    keep = spec.inside(x)
    idx = cand[keep]
    pts = x[keep]
    L = len(idx)
    if L == 0:
        raise ResolutionError("no lattice points inside the domain")
    lookup = {tuple(i): p for p, i in enumerate(idx.tolist())}

    nb = np.empty((L, n, 2), dtype=np.int64)
    arms = np.ones((L, n, 2))
    bd_pts, bd_key = [], {}
    approaches = []

    def boundary_point(p, a, s):
        t = shape.crossing(pts[p], a, s)
        theta = min(max(t / h, 1e-14), 1.0)
        y = pts[p].copy()
        y[a] += s * theta * h
        key = tuple(np.round(y / h, 9).tolist())
        if key not in bd_key:
            bd_key[key] = len(bd_pts)
            bd_pts.append(y)
        return bd_key[key], theta

    for p in range(L):
        for a in range(n):
            for j, s in enumerate((-1, 1)):
                q = idx[p].copy()
                q[a] += s
                hit = lookup.get(tuple(q.tolist()))
                if hit is not None:
                    nb[p, a, j] = hit
                else:
                    b, theta = boundary_point(p, a, s)
                    nb[p, a, j] = -1 - b
                    arms[p, a, j] = theta

    # choose slaved nodes: shortest arm below theta_min, opposite side not slaved
    short = arms.min(axis=(1, 2)) < theta_min
    changed = True
    chosen = {p: None for p in np.flatnonzero(short)}
    while changed:
        changed = False
        for p in list(chosen):
            options = []
            for a in range(n):
                for j in (0, 1):
                    if arms[p, a, j] < theta_min:
                        opp = nb[p, a, 1 - j]
                        ok = opp < 0 or opp not in chosen
                        if ok:
                            options.append((arms[p, a, j], a, j))
            new = min(options) if options else None
            if new is None:
                del chosen[p]
                changed = True
            elif chosen[p] != new:
                chosen[p] = new
                changed = True
    slaved = sorted(chosen)
    cand_slave = chosen
    active = [p for p in range(L) if p not in cand_slave]
    order = np.array(active + slaved, dtype=np.int64)
    A = len(active)
    inv = np.empty(L, dtype=np.int64)
    inv[order] = np.arange(L)

    def remap(v):
        return np.where(v >= 0, inv[np.maximum(v, 0)], L - 1 - v)

    nb = remap(nb[order])
    arms = arms[order]
    idx = idx[order]
    pts = pts[order]

    s_opp, s_bd, s_w = [], [], []
    for p in slaved:
        _, a, j = cand_slave[p]
        q = inv[p]
        th_b = arms[q, a, j]
        th_o = arms[q, a, 1 - j]
        s_bd.append(nb[q, a, j])
        s_opp.append(nb[q, a, 1 - j])
        s_w.append(th_b / (th_b + th_o))

    B = len(bd_pts)
    bd_coords = np.array(bd_pts).reshape(B, n)
    coords = np.vstack([pts, bd_coords])
    bd_normal = np.array([shape.outward_normal(y) for y in bd_coords]).reshape(B, n)

    for p in range(L):
        for a in range(n):
            for j, s in enumerate((-1, 1)):
                b = nb[p, a, j]
                if b >= L:
                    far = nb[p, a, 1 - j]
                    approaches.append((b, p, a, s, far, arms[p, a, j], arms[p, a, 1 - j]))
    app = np.array([r[:5] for r in approaches], dtype=np.int64).reshape(-1, 5)
    app_arms = np.array([r[5:] for r in approaches], dtype=float).reshape(-1, 2)

    weights = np.zeros(L + B)
    cell = np.prod(0.5 * (arms[:, :, 0] + arms[:, :, 1]), axis=1) * h**n
    weights[:L] = cell
    if n == 1:
        # trapezoid closure: each cut point carries half its arm
        for b, p, a, s, far, th, _ in approaches:
            weights[b] += 0.5 * th * h
    return Grid(
        spec=spec, h=float(h), index=idx, coords=coords, nb=nb, arms=arms,
        n_active=A, n_lattice=L,
        slave_opp=np.array(s_opp, dtype=np.int64), slave_bd=np.array(s_bd, dtype=np.int64),
        slave_wopp=np.array(s_w, dtype=float),
        bd_normal=bd_normal, approach=app, approach_arms=app_arms, weights=weights,
    )
