"""Effective dynamic radius of an edge and the checks built on it.

Geometry relative to an edge e = (x_e, y_e): ring k is the set of vertices at
∞-distance exactly k from x_e, Λ_k(e) the box of radius k around x_e, and the
annulus A_N(e) = Λ_{3N}(e) ∖ Λ_N(e) consists of rings N+1 … 3N.  A crossing
path of A_N(e) stays in the annulus and joins ring N+1 to ring 3N.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .environment import TRUNCATED, CoupledEnvironment, EnvironmentView
from .geodesics import GeodesicSummary
from .kernels import INF
from .lattice import BoxLattice, Window


# --- window helpers -----------------------------------------------------------

def _x_e(lattice: BoxLattice, e: int) -> np.ndarray:
    return lattice.coords(lattice.edge_u[e])


def boundary_pairs(win: Window, R: int) -> list[tuple[int, int]]:
    """Antipodal boundary pairs of Λ_R(center): axial pairs and corner diagonals."""
    c = win.center
    d = len(c)
    pairs = []
    for a in range(d):
        step = np.zeros(d, dtype=np.int64)
        step[a] = R
        pairs.append((c - step, c + step))
    for signs in itertools.product((1, -1), repeat=d - 1):
        s = np.array((1,) + signs, dtype=np.int64) * R
        pairs.append((c - s, c + s))
    return [(win.local_index(p), win.local_index(q)) for p, q in pairs]


def _minimal_crossings(path, ring, N) -> list[list[int]]:
    """Sub-paths going from ring N+1 to ring 3N (either direction) through the annulus."""
    out = []
    inner, outer = N + 1, 3 * N
    last_kind, last_pos = None, -1
    for i, v in enumerate(path):
        r = ring[v]
        if r <= N or r > outer:
            last_kind, last_pos = None, -1
            continue
        kind = "in" if r == inner else ("out" if r == outer else None)
        if kind is None:
            continue
        if last_kind is not None and kind != last_kind:
            out.append(list(path[last_pos: i + 1]))
        last_kind, last_pos = kind, i
    return out


@dataclass
class _AnnulusData:
    win: Window
    ring: np.ndarray
    in_A: np.ndarray
    open_w: np.ndarray      # local chemical weights restricted to the annulus (1 / -1)
    trunc_w: np.ndarray     # local truncated weights on the whole window


def _annulus(view: EnvironmentView, e: int, N: int, C_star: int) -> _AnnulusData:
    lat = view.lattice
    win = lat.window(_x_e(lat, e), C_star * N)
    ring = win.linf()
    in_A = (ring > N) & (ring <= 3 * N)
    g = win.grid
    open_loc = view.open_mask()[win.edges]
    both_in = in_A[g.edge_u] & in_A[g.edge_v]
    open_w = np.where(open_loc & both_in, 1, -1).astype(np.int64)
    trunc_w = np.where(open_loc, 1, view.M).astype(np.int64)
    return _AnnulusData(win, ring, in_A, open_w, trunc_w)


def _open_components(ad: _AnnulusData, N: int) -> list[np.ndarray]:
    g = ad.win.grid
    labels = kernels.union_find_labels(g.n_vertices, g.edge_u, g.edge_v, ad.open_w > 0)
    inner = np.unique(labels[ad.ring == N + 1])
    outer = np.unique(labels[ad.ring == 3 * N])
    crossing = np.intersect1d(inner, outer)
    return [np.flatnonzero(labels == c) for c in crossing]


def _set_distances_ok(ad: _AnnulusData, sets: list[np.ndarray], limit: int) -> bool:
    """All pairs of vertex sets within open distance ``limit`` inside the annulus."""
    g = ad.win.grid
    allowed = ad.in_A.astype(np.uint8)
    for i in range(len(sets) - 1):
        dist, _ = kernels.shortest_paths(g.nbr, g.nbr_edge, ad.open_w, sets[i], maxw=1,
                                         allowed=allowed)
        for j in range(i + 1, len(sets)):
            if dist[sets[j]].min() > limit:
                return False
    return True


# --- the two window events ------------------------------------------------------

def _inside(lattice: BoxLattice, e: int, R: int) -> bool:
    x = _x_e(lattice, e)
    return bool(np.all(np.abs(x) + R <= lattice.side))


def check_W(view: EnvironmentView, e: int, N: int, C_star: int) -> tuple[bool, bool]:
    """``(W_N holds, window clipped)`` for the open configuration of the view."""
    lat = view.lattice
    win = lat.window(_x_e(lat, e), 4 * N)
    linf = win.linf()
    ok = kernels.w_event(win.grid.nbr, win.grid.nbr_edge, view.open_mask()[win.edges],
                         linf <= 3 * N, C_star * N, hub_rank=linf)
    return ok, win.clipped


def crossing_components(view: EnvironmentView, e: int, N: int) -> int:
    """Number of open clusters of the annulus A_N(e) that cross it."""
    lat = view.lattice
    win = lat.window(_x_e(lat, e), 3 * N)
    ring = win.linf()
    g = win.grid
    in_A = ring > N
    open_loc = view.open_mask()[win.edges] & in_A[g.edge_u] & in_A[g.edge_v]
    labels = kernels.union_find_labels(g.n_vertices, g.edge_u, g.edge_v, open_loc)
    return len(np.intersect1d(labels[ring == N + 1], labels[ring == 3 * N]))


def check_V_surrogate(view: EnvironmentView, e: int, N: int, C_star: int) -> tuple[bool, bool]:
    """``(surrogate V_N holds, window clipped)``.

    Relevant sets are the open components of the annulus that cross it, and
    the minimal crossing sub-paths of one truncated geodesic (inside
    Λ_{C*N}(e)) for every antipodal boundary pair of that box.  The event
    holds when every pair of relevant sets is joined by an open path inside
    the annulus of length ≤ C*·N.
    """
    ad = _annulus(view, e, N, C_star)
    comps = _open_components(ad, N)
    if len(comps) > 1:
        return False, ad.win.clipped  # distinct components are at infinite distance
    sets = list(comps)
    g = ad.win.grid
    R = C_star * N
    seen = set()
    M = view.M
    for p, q in boundary_pairs(ad.win, R) if not ad.win.clipped else []:
        dist, _ = kernels.shortest_paths(g.nbr, g.nbr_edge, ad.trunc_w, p, maxw=M, stop_vertex=q)
        for seg in _minimal_crossings(
                kernels.trace_path(g.nbr, g.nbr_edge, ad.trunc_w, dist, q).tolist(), ad.ring, N):
            key = frozenset(seg)
            if key not in seen:
                seen.add(key)
                sets.append(np.asarray(seg, dtype=np.int64))
    return _set_distances_ok(ad, sets, C_star * N), ad.win.clipped


# --- exhaustive variant for small windows ----------------------------------------

@dataclass
class ExactVResult:
    holds: bool
    exhaustive: bool
    n_paths: int
    undecided: int


def check_V_exact(view: EnvironmentView, e: int, N: int, C_star: int,
                  path_budget: int = 200_000, max_closed: int = 10) -> ExactVResult:
    """V_N by enumerating the minimal crossing paths of the annulus.

    A crossing path is relevant when its closed edges all lie on one
    truncated geodesic inside Λ_{C*N}(e).  Sub-paths of relevant paths are
    relevant, so only minimal crossing paths are needed, and the search is
    pruned as soon as the closed edges collected so far fail the test.
    Paths with more than ``max_closed`` closed edges are counted as undecided.
    """
    ad = _annulus(view, e, N, C_star)
    g = ad.win.grid
    M = view.M
    tw = ad.trunc_w
    ring = ad.ring
    inner, outer = N + 1, 3 * N
    dcache: dict[int, np.ndarray] = {}

    def T(u, v):
        if u not in dcache:
            dcache[u], _ = kernels.shortest_paths(g.nbr, g.nbr_edge, tw, u, maxw=M)
        return int(dcache[u][v])

    def on_one_geodesic(closed):
        m = len(closed)
        if m == 0:
            return True
        if m == 1:
            u, v = closed[0]
            return T(u, v) == M
        # orientations: 2 per edge; state index = 2*i + o; (a, b) = entry, exit
        ends = []
        for u, v in closed:
            ends.append((u, v))
            ends.append((v, u))
        full = (1 << m) - 1
        for s in range(2 * m):
            best = {(1 << (s // 2), s): M}
            for mask in range(1, full + 1):
                for last in range(2 * m):
                    c = best.get((mask, last))
                    if c is None:
                        continue
                    for nxt in range(2 * m):
                        if mask >> (nxt // 2) & 1:
                            continue
                        gap = T(ends[last][1], ends[nxt][0])
                        if gap >= INF:
                            continue
                        key = (mask | 1 << (nxt // 2), nxt)
                        val = c + gap + M
                        if val < best.get(key, INF):
                            best[key] = val
            a0 = ends[s][0]
            for last in range(2 * m):
                c = best.get((full, last))
                if c is not None and c == T(a0, ends[last][1]):
                    return True
        return False

    paths = []
    undecided = 0
    exhaustive = True
    deg = g.nbr.shape[1]
    for start in np.flatnonzero(ring == inner):
        stack = [(int(start), [int(start)], [])]
        while stack:
            v, path, closed = stack.pop()
            for j in range(deg):
                u = int(g.nbr[v, j])
                if u < 0 or u in path:
                    continue
                r = ring[u]
                if r <= inner or r > outer:
                    continue
                le = int(g.nbr_edge[v, j])
                new_closed = closed if tw[le] == 1 else closed + [(v, u)]
                if len(new_closed) > max_closed:
                    undecided += 1
                    continue
                if new_closed is not closed and not on_one_geodesic(new_closed):
                    continue
                if r == outer:
                    paths.append(path + [u])
                    if len(paths) >= path_budget:
                        exhaustive = False
                        stack.clear()
                        break
                else:
                    stack.append((u, path + [u], new_closed))
        if not exhaustive:
            break
    if not paths:
        return ExactVResult(True, exhaustive, 0, undecided)
    A = np.flatnonzero(ad.in_A)
    pos = -np.ones(g.n_vertices, dtype=np.int64)
    pos[A] = np.arange(len(A))
    dmat = np.empty((len(A), len(A)), dtype=np.int64)
    allowed = ad.in_A.astype(np.uint8)
    for i, v in enumerate(A):
        dist, _ = kernels.shortest_paths(g.nbr, g.nbr_edge, ad.open_w, int(v), maxw=1,
                                         allowed=allowed)
        dmat[i] = dist[A]
    uniq = {frozenset(p) for p in paths}
    mem = np.zeros((len(uniq), len(A)), dtype=np.float32)
    close = np.zeros((len(uniq), len(A)), dtype=np.bool_)
    limit = C_star * N
    for i, s in enumerate(uniq):
        idx = pos[list(s)]
        mem[i, idx] = 1
        close[i] = dmat[idx].min(axis=0) <= limit
    # every set must meet every distinct neighbourhood; neighbourhoods repeat a lot
    close = np.unique(close, axis=0).astype(np.float32)
    reach = mem @ close.T
    return ExactVResult(bool(np.all(reach > 0)), exhaustive, len(uniq), undecided)


# --- the radius ------------------------------------------------------------------

@dataclass
class RadiusRecord:
    edge: int
    t: float
    r: int | None
    hat_r: int | None
    C_star: int
    M: int
    overflow: bool
    clipped: bool
    flags: list = field(default_factory=list)   # (N, V0, W0, Vt, Wt); None = not evaluated
    v_mode: str = "surrogate"


def radius(env: CoupledEnvironment, e: int, t: float, C_star: int, max_N: int | None = None,
           short_circuit: bool = False, v_mode: str = "surrogate") -> RadiusRecord:
    """Smallest N at which V_N and W_N hold in both the 0- and t-views.

    The scan stops with ``overflow`` once Λ_{C*N}(e) leaves the box or N
    exceeds ``max_N``.
    """
    lat = env.lattice
    views = (env.view(0.0, TRUNCATED), env.view(t, TRUNCATED))
    flags = []
    N = 1
    while True:
        if max_N is not None and N > max_N:
            return RadiusRecord(e, t, None, None, C_star, env.M, True, False, flags, v_mode)
        if not _inside(lat, e, C_star * N):
            return RadiusRecord(e, t, None, None, C_star, env.M, True, True, flags, v_mode)
        row = [N, None, None, None, None]
        ok = True
        # cheap checks first; flags keep the (V0, W0, Vt, Wt) layout
        if short_circuit and v_mode != "exact":
            for slot, view in ((1, views[0]), (3, views[1])):
                if ok and crossing_components(view, e, N) > 1:
                    row[slot] = False
                    ok = False
        for slot, view, check in ((2, views[0], "W"), (4, views[1], "W"),
                                  (1, views[0], "V"), (3, views[1], "V")):
            if short_circuit and not ok:
                continue
            if check == "W":
                val = check_W(view, e, N, C_star)[0]
            elif v_mode == "exact":
                val = check_V_exact(view, e, N, C_star).holds
            else:
                val = check_V_surrogate(view, e, N, C_star)[0]
            row[slot] = bool(val)
            ok = ok and val
        flags.append(tuple(row))
        if ok:
            return RadiusRecord(e, t, N, min(C_star * N, env.M), C_star, env.M, False, False,
                                flags, v_mode)
        N += 1


def hat_radius(env: CoupledEnvironment, e: int, t: float, C_star: int) -> int:
    """ĥr_e = min(C*·r_e, M).

    Only scales N < M/C* can give a value below M, so the scan stops there.
    An edge whose window leaves the box first gets M (an upper bound).
    """
    M = env.M
    n_max = -(-M // C_star) - 1
    if n_max < 1:
        return M
    rec = radius(env, e, t, C_star, max_N=n_max, short_circuit=True)
    return M if rec.r is None else min(C_star * rec.r, M)


def radius_indicator(env: CoupledEnvironment, e: int, t: float, C_star: int, ell: int) -> bool:
    """The indicator of {r_e = ell}, evaluated from scales N ≤ ell only."""
    rec = radius(env, e, t, C_star, max_N=ell, short_circuit=True)
    return rec.r == ell


def locality_check(env_a: CoupledEnvironment, env_b: CoupledEnvironment, e: int, t: float,
                   C_star: int, ell: int) -> bool:
    """Do two environments agree on {r_e = ell}?  (They should whenever they
    coincide on Λ_{C*ell}(e).)"""
    return radius_indicator(env_a, e, t, C_star, ell) == radius_indicator(env_b, e, t, C_star, ell)


def perturb_outside(env: CoupledEnvironment, e: int, R: int, rng: np.random.Generator,
                    ) -> CoupledEnvironment:
    """Copy of ``env`` with every edge not inside Λ_R(e) independently resampled."""
    lat = env.lattice
    x = _x_e(lat, e)
    inside = np.zeros(lat.n_edges, dtype=bool)
    inside[lat.edges_inside(x - R, x + R)] = True
    out = ~inside
    k = int(out.sum())
    o0 = env.open_0.copy()
    op = env.open_prime.copy()
    U = env.U.copy()
    o0[out] = rng.random(k) < env.p
    op[out] = rng.random(k) < env.p
    U[out] = rng.random(k)
    return CoupledEnvironment(lat, o0, op, U, env.p, env.M, env.sample_index, env.seed)


# --- tail survey -------------------------------------------------------------------

def interior_edges(lattice: BoxLattice, reach: int) -> np.ndarray:
    """Edges whose lower endpoint lies within ∞-distance ``reach`` of the origin."""
    xe = lattice.coords(lattice.edge_u)
    return np.flatnonzero(np.max(np.abs(xe), axis=1) <= reach)


def sample_radii(env: CoupledEnvironment, edges, t: float, C_star: int):
    """``(r, scanned)`` per edge: r = -1 on overflow; ``scanned`` is the last
    scale examined."""
    r = np.empty(len(edges), dtype=np.int64)
    scanned = np.empty(len(edges), dtype=np.int64)
    for k, e in enumerate(edges):
        rec = radius(env, int(e), t, C_star, short_circuit=True)
        r[k] = -1 if rec.r is None else rec.r
        scanned[k] = len(rec.flags)
    return r, scanned


@dataclass(frozen=True)
class TailTable:
    ells: np.ndarray
    counts: np.ndarray        # #{r_e >= ell}, overflowed edges included while ell <= scan + 1
    survival: np.ndarray
    fit_mask: np.ndarray      # counts >= min_count
    slope: float
    intercept: float
    r2: float
    total: int
    overflow: int
    cap: int                  # largest ell at which every edge's survival is known


def tail_table(r, scanned, min_count: int = 30) -> TailTable:
    """Survival of r_e and a least-squares fit of its logarithm.

    An overflowed edge is known to satisfy r_e > scanned, so the table stops
    at the smallest scanned + 1 among overflowed edges.
    """
    from .stats import linear_fit

    r = np.asarray(r)
    scanned = np.asarray(scanned)
    over = r < 0
    cap = int(scanned[over].min() + 1) if over.any() else int(max(r.max(initial=1), 1))
    ells = np.arange(1, cap + 1)
    counts = np.array([int(np.sum(over | (r >= ell))) for ell in ells])
    surv = counts / max(len(r), 1)
    mask = counts >= min_count
    fit = linear_fit(ells[mask], np.log(surv[mask]))
    return TailTable(ells, counts, surv, mask, fit.slope, fit.intercept, fit.r2, len(r),
                     int(over.sum()), cap)


# --- bypass verification -----------------------------------------------------------

@dataclass(frozen=True)
class BypassEntry:
    edge: int
    r: int
    extra: int | None      # |η ∖ γ| of the cheapest bypass; None if none exists
    bound: int
    violation: bool


@dataclass(frozen=True)
class BypassReport:
    checked: int
    skipped_near_endpoint: int
    skipped_overflow: int
    entries: tuple

    @property
    def violations(self) -> int:
        return sum(x.violation for x in self.entries)


def cheapest_bypass(view: EnvironmentView, path_edges, a: int, b: int, center, r: int) -> int | None:
    """Fewest off-path open edges in a route from a to b avoiding Λ_r(center).

    Edges of ``path_edges`` are free, other open edges cost 1, closed edges
    are unusable.
    """
    lat = view.lattice
    w = np.where(view.open_mask(), 1, -1).astype(np.int64)
    w[np.asarray(path_edges, dtype=np.int64)] = 0
    far = np.max(np.abs(lat._coords + lat.origin - np.asarray(center)), axis=1) > r
    dist, _ = kernels.shortest_paths(lat.nbr, lat.nbr_edge, w, a, maxw=1,
                                     allowed=far.astype(np.uint8), stop_vertex=b)
    return None if dist[b] >= INF else int(dist[b])


def verify_bypass(env: CoupledEnvironment, t: float, summary: GeodesicSummary, C_star: int,
                  radii: dict | None = None, max_N: int | None = None) -> BypassReport:
    """Check |η_e ∖ γ| ≤ C*·r_e for the edges of π̃ of a truncated summary.

    γ is the canonical geodesic of ``summary``; ``radii`` may supply r_e per
    edge, otherwise it is computed with :func:`radius` at noise level t.
    """
    lat = env.lattice
    view = env.view(summary.t, TRUNCATED)
    gamma = summary.canonical_path(lat)
    ca = lat.coords(summary.a)
    cb = lat.coords(summary.b)
    entries = []
    near = 0
    overflow = 0
    for e in summary.all:
        e = int(e)
        if radii is not None and e in radii:
            r = int(radii[e])
        else:
            rec = radius(env, e, t, C_star, max_N=max_N, short_circuit=True)
            if rec.r is None:
                overflow += 1
                continue
            r = rec.r
        x = _x_e(lat, e)
        if np.max(np.abs(ca - x)) <= 3 * r or np.max(np.abs(cb - x)) <= 3 * r:
            near += 1
            continue
        extra = cheapest_bypass(view, gamma, summary.a, summary.b, x, r)
        bound = C_star * r
        entries.append(BypassEntry(e, r, extra, bound, extra is None or extra > bound))
    return BypassReport(len(entries), near, overflow, tuple(entries))

