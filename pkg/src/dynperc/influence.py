"""Discrete derivatives, co-derivatives and co-influences of single edges."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .environment import CHEMICAL, CLOSED, TRUNCATED, CoupledEnvironment, EnvironmentView
from .geodesics import UNREACHABLE, GeodesicSummary, distance, geodesic_summary, overlap
from .lattice import rng_stream
from .percolation import ClusterLabeling, label_clusters, regularize
from .stats import mean_se


def _value(view: EnvironmentView, z0, z1) -> int | None:
    """T̃ between regularized endpoints; None when infinite (chemical mode)."""
    lab = label_clusters(view.with_mode(CHEMICAL))
    a = regularize(lab, z0).index
    b = regularize(lab, z1).index
    d = distance(view, a, b)
    return None if d >= UNREACHABLE else d


def discrete_derivative(view: EnvironmentView, a, b, e: int, z0, z1) -> int | None:
    """T̃∘σ_e^a − T̃∘σ_e^b by full recomputation, endpoints regularized per override.

    Returns None when either value is infinite (chemical mode).
    """
    if a == b:
        view.override(e, a)  # validates a
        return 0
    va = _value(view.override(e, a), z0, z1)
    vb = _value(view.override(e, b), z0, z1)
    if va is None or vb is None:
        return None
    return va - vb


class RegularizationState:
    """Cluster data used to certify that one edge flip leaves [z0], [z1] unchanged."""

    def __init__(self, view: EnvironmentView, z0, z1, labeling: ClusterLabeling | None = None):
        lat = view.lattice
        chem = view.with_mode(CHEMICAL)
        self.lattice = lat
        self.open = chem.open_mask()
        self.lab = lab = labeling if labeling is not None else label_clusters(chem)
        self.r = [regularize(lab, z0), regularize(lab, z1)]
        self.z = [np.asarray(z0), np.asarray(z1)]
        ids, sizes = lab.cluster_ids, lab.sizes
        self.k = np.searchsorted(ids, lab.labels)  # dense cluster index per vertex
        self.sizes = sizes
        self.g = int(np.searchsorted(ids, lab.giant))
        self.gsize = int(sizes[self.g])
        others = np.delete(sizes, self.g)
        self.second = int(others.max()) if others.size else 0
        self.giant_crosses = all(lab.crossing)
        # faces touched by each cluster, as a bit mask
        c = lat._coords
        top = 2 * lat.side
        faces = np.zeros(lat.n_vertices, dtype=np.int64)
        for a in range(lat.d):
            faces |= np.where(c[:, a] == 0, 1 << (2 * a), 0)
            faces |= np.where(c[:, a] == top, 1 << (2 * a + 1), 0)
        self.face = np.zeros(len(ids), dtype=np.int64)
        np.bitwise_or.at(self.face, self.k, faces)
        self.all_faces = (1 << (2 * lat.d)) - 1
        # closest vertex of every cluster to each endpoint, as (distance, index)
        coords = c + lat.origin
        self.best = []
        for z in self.z:
            dz = np.max(np.abs(coords - z), axis=1)
            key = dz * lat.n_vertices + np.arange(lat.n_vertices)
            bk = np.full(len(ids), np.iinfo(np.int64).max)
            np.minimum.at(bk, self.k, key)
            self.best.append(bk)
        self.rkey = [r.displacement * lat.n_vertices + r.index for r in self.r]
        boundary = faces != 0
        self.tin, self.sub, self.bsub, self.bchild = kernels.bridge_tree(
            lat.nbr, lat.nbr_edge, self.open, lab.giant, boundary)
        self.btotal = int(self.bsub[lab.giant])

    def unchanged_on_flip(self, edges: np.ndarray) -> np.ndarray:
        """Per edge: is the regularization certainly unchanged after flipping its state?"""
        lat = self.lattice
        ku = self.k[lat.edge_u[edges]]
        kv = self.k[lat.edge_v[edges]]
        is_open = self.open[edges]
        ok = np.zeros(len(edges), dtype=bool)

        # closing an open edge
        same = is_open & (ku == kv)
        outside = same & (ku != self.g)
        ok |= outside
        in_giant = same & (ku == self.g)
        child = self.bchild[edges]
        ok |= in_giant & (child < 0)
        br = in_giant & (child >= 0)
        if br.any():
            ch = child[br]
            lo = self.tin[ch]
            hi = lo + self.sub[ch]
            pieces_ok = np.ones(len(ch), dtype=bool)
            side = []
            for r in self.r:
                t = self.tin[r.index]
                side.append((t >= lo) & (t < hi))
            together = side[0] == side[1]
            main_in_sub = side[0]
            main_size = np.where(main_in_sub, self.sub[ch], self.gsize - self.sub[ch])
            other_bnd = np.where(main_in_sub, self.btotal - self.bsub[ch], self.bsub[ch])
            pieces_ok &= together & (other_bnd == 0) & (main_size > self.second)
            ok[np.flatnonzero(br)[pieces_ok]] = True

        # opening a closed edge
        cl = ~is_open
        ok |= cl & (ku == kv)
        diff = cl & (ku != kv)
        touch_g = diff & ((ku == self.g) | (kv == self.g))
        if touch_g.any():
            other = np.where(ku == self.g, kv, ku)[touch_g]
            far = np.ones(len(other), dtype=bool)
            for j in range(2):
                far &= self.best[j][other] > self.rkey[j]
            ok[np.flatnonzero(touch_g)[far]] = True
        neither = diff & (ku != self.g) & (kv != self.g)
        if neither.any():
            a, b = ku[neither], kv[neither]
            merged = self.sizes[a] + self.sizes[b]
            crosses = (self.face[a] | self.face[b]) == self.all_faces
            safe = (merged < self.gsize) & (self.giant_crosses | ~crosses)
            ok[np.flatnonzero(neither)[safe]] = True
        return ok


def derivative_field(view: EnvironmentView, z0, z1, edges=None,
                     summary: GeodesicSummary | None = None,
                     state: RegularizationState | None = None):
    """∇_e^{M,1} T̃ (truncated) or ∇_e^{∞,1} D̃ (chemical) for many edges at once.

    Edges whose flip certainly leaves the regularized endpoints unchanged are
    evaluated from the forward/backward distance fields; the rest by full
    recomputation.  Returns ``(edges, values, finite)``; ``values`` is 0 where
    ``finite`` is False.
    """
    lat = view.lattice
    edges = np.arange(lat.n_edges) if edges is None else np.asarray(edges, dtype=np.int64)
    state = state or RegularizationState(view, z0, z1)
    if summary is None:
        summary = geodesic_summary(view, state.r[0].index, state.r[1].index)
    T = summary.distance
    w = summary.weights
    da, db = summary.da, summary.db
    closed_w = view.closed_weight
    values = np.zeros(len(edges), dtype=np.int64)
    finite = np.ones(len(edges), dtype=bool)
    certified = state.unchanged_on_flip(edges)
    is_open = view.open_mask()[edges]

    # open edge: closing it matters only for edges on every geodesic
    in_all = np.isin(edges, summary.all)
    for k in np.flatnonzero(certified & is_open & in_all):
        e = int(edges[k])
        d_removed = distance(view, summary.a, summary.b, removed_edge=e)
        if closed_w is CLOSED:
            if d_removed >= UNREACHABLE:
                finite[k] = False
            else:
                values[k] = d_removed - T
        else:
            values[k] = min(d_removed, T + closed_w - 1) - T
    # closed edge: opening it can only shorten
    sel = np.flatnonzero(certified & ~is_open)
    if sel.size:
        x = lat.edge_u[edges[sel]]
        y = lat.edge_v[edges[sel]]
        t1 = np.minimum(da[x] + 1 + db[y], da[y] + 1 + db[x])
        values[sel] = T - np.minimum(T, t1)
    for k in np.flatnonzero(~certified):
        e = int(edges[k])
        d = discrete_derivative(view, closed_w, 1, e, z0, z1)
        if d is None:
            finite[k] = False
        else:
            values[k] = d
    return edges, values, finite


@dataclass(frozen=True)
class InfluenceRecord:
    edge: int
    t: float
    grad_0: int            # ∇_e^{M,1} T̃_M
    grad_t: int            # ∇_e^{M,1} T̃^t_M
    inf: int               # grad_0 · grad_t
    co_derivative: int     # Δ_e with the sampled ω^1_e, ω^2_e
    tau_e: int
    tau_e_t: int
    tau1_e: int
    tau2_e: int
    q_0: bool
    q_t: bool
    in_all_0: bool
    in_all_t: bool


def _q_flag(view: EnvironmentView, e: int, z0, z1) -> bool:
    chem = view.with_mode(CHEMICAL)
    lab = label_clusters(chem)
    lab_e = label_clusters(chem.override(e, CLOSED))
    return all(regularize(lab, z).index == regularize(lab_e, z).index for z in (z0, z1))


def _in_all(view: EnvironmentView, e: int, z0, z1) -> bool:
    lab = label_clusters(view.with_mode(CHEMICAL))
    s = geodesic_summary(view, regularize(lab, z0).index, regularize(lab, z1).index)
    return bool(np.isin(e, s.all))


def co_influence(env: CoupledEnvironment, e: int, t: float, z0, z1) -> InfluenceRecord:
    """Co-influence and co-derivative of edge ``e`` for T̃_M at noise level t.

    ω^1_e and ω^2_e come from a dedicated stream keyed on (sample, edge, t).
    """
    M = env.M
    v0 = env.view(0.0, TRUNCATED)
    vt = env.view(t, TRUNCATED)
    g0 = discrete_derivative(v0, M, 1, e, z0, z1)
    gt = discrete_derivative(vt, M, 1, e, z0, z1)
    t_key = int(np.float64(t).view(np.uint64))
    u1, u2 = rng_stream(env.seed, "coinfluence", env.sample_index, e, t_key).random(2)
    tau1 = 1 if u1 < env.p else M
    tau2 = 1 if u2 < env.p else M
    tau_e = v0.weight(e)
    # ∇^{τ_e, τ^i_e} equals +∇^{M,1}, −∇^{M,1} or 0 depending on the two values;
    # both factors override e, so the t-view factor also starts from τ_e
    f1 = 0 if tau1 == tau_e else (g0 if tau_e == M else -g0)
    f2 = 0 if tau2 == tau_e else (gt if tau_e == M else -gt)
    return InfluenceRecord(
        edge=int(e), t=float(t), grad_0=g0, grad_t=gt, inf=g0 * gt, co_derivative=f1 * f2,
        tau_e=tau_e, tau_e_t=vt.weight(e), tau1_e=tau1, tau2_e=tau2,
        q_0=_q_flag(v0, e, z0, z1), q_t=_q_flag(vt, e, z0, z1),
        in_all_0=_in_all(v0, e, z0, z1), in_all_t=_in_all(vt, e, z0, z1),
    )


def default_edge_filter(lattice, margin: int) -> np.ndarray:
    """Edges with both endpoints at ∞-distance ≤ side − margin from the origin."""
    r = lattice.side - margin
    return lattice.edges_inside((-r,) * lattice.d, (r,) * lattice.d)


@dataclass(frozen=True)
class TotalCoinfluence:
    t: float
    total: float
    total_se: float
    overlap: float
    overlap_se: float
    samples: int
    per_sample_total: np.ndarray
    per_sample_overlap: np.ndarray


def sample_total_coinfluence(env: CoupledEnvironment, t: float, z0, z1, edges) -> tuple[int, int]:
    """(Σ_e Inf_e over ``edges``, |π̃_M ∩ π̃^t_M|) for one environment."""
    parts = []
    summaries = []
    for s in (0.0, t):
        view = env.view(s, TRUNCATED)
        state = RegularizationState(view, z0, z1)
        summ = geodesic_summary(view, state.r[0].index, state.r[1].index)
        _, vals, _ = derivative_field(view, z0, z1, edges, summ, state)
        parts.append(vals)
        summaries.append(summ)
    return int(np.sum(parts[0] * parts[1])), overlap(summaries[0], summaries[1])


def total_coinfluence(envs, t: float, z0, z1, edges) -> TotalCoinfluence:
    tot, ov = [], []
    for env in envs:
        a, b = sample_total_coinfluence(env, t, z0, z1, edges)
        tot.append(a)
        ov.append(b)
    tot = np.asarray(tot, dtype=float)
    ov = np.asarray(ov, dtype=float)
    m1, s1 = mean_se(tot)
    m2, s2 = mean_se(ov)
    return TotalCoinfluence(float(t), m1, s1, m2, s2, len(tot), tot, ov)
