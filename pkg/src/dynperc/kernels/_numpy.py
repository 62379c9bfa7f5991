"""Pure numpy/scipy versions of the graph kernels.

Same signatures and results as the compiled kernels; used when numba is
disabled and as an independent implementation in the cross-backend tests.
"""
from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

INF = np.int64(1) << np.int64(60)


def sssp(nbr, nbr_edge, w, sources, maxw, removed_edge, allowed, stop_vertex):
    """Level-synchronous shortest paths; levels are settled in increasing distance."""
    nv, deg = nbr.shape
    w = np.asarray(w, dtype=np.int64)
    if removed_edge >= 0:
        w = w.copy()
        w[removed_edge] = -1
    ok_vertex = np.ones(nv, dtype=bool) if len(allowed) == 0 else np.asarray(allowed, dtype=bool)
    valid = nbr >= 0
    wn = np.where(valid, w[np.where(valid, nbr_edge, 0)], -1)
    wn = np.where(valid & ok_vertex[np.where(valid, nbr, 0)], wn, -1)

    dist = np.full(nv, INF, dtype=np.int64)
    settled = np.zeros(nv, dtype=bool)
    src = np.unique(np.asarray(sources, dtype=np.int64))
    src = src[ok_vertex[src]]
    dist[src] = 0
    order = []
    # tentative distances kept per level to avoid rescanning every vertex
    pending = {0: src}
    while pending:
        cur = min(pending)
        cand = pending.pop(cur)
        frontier = np.unique(cand[(dist[cand] == cur) & ~settled[cand]])
        while frontier.size:
            settled[frontier] = True
            order.append(frontier)
            if stop_vertex >= 0 and settled[stop_vertex]:
                return dist, np.concatenate(order)
            nb = nbr[frontier].ravel()
            wt = wn[frontier].ravel()
            keep = wt >= 0
            nb, wt = nb[keep], wt[keep]
            keep = ~settled[nb]
            nb, wt = nb[keep], wt[keep]
            nd = cur + wt
            better = nd < dist[nb]
            nb, nd = nb[better], nd[better]
            np.minimum.at(dist, nb, nd)
            zero = nb[nd == cur]
            frontier = np.unique(zero[~settled[zero]])
            for level in np.unique(nd[nd > cur]):
                sel = nb[nd == level]
                pending[int(level)] = np.concatenate([pending.get(int(level), sel[:0]), sel])
    out = np.concatenate(order) if order else np.empty(0, dtype=np.int64)
    return dist, out


def count_geodesics(dist, order, nbr, nbr_edge, w, p1, p2):
    nv, deg = nbr.shape
    p1 = np.uint64(p1)
    p2 = np.uint64(p2)
    c1 = np.zeros(nv, dtype=np.uint64)
    c2 = np.zeros(nv, dtype=np.uint64)
    if len(order) == 0:
        return c1, c2
    d_order = dist[order]
    breaks = np.flatnonzero(np.diff(d_order)) + 1
    for level in np.split(order, breaks):
        if dist[level[0]] == 0:
            c1[level] = 1
            c2[level] = 1
            continue
        a1 = np.zeros(len(level), dtype=np.uint64)
        a2 = np.zeros(len(level), dtype=np.uint64)
        dv = dist[level]
        for j in range(deg):
            u = nbr[level, j]
            valid = u >= 0
            us = np.where(valid, u, 0)
            we = np.where(valid, w[np.where(valid, nbr_edge[level, j], 0)], -1)
            tight = valid & (we > 0) & (dist[us] < INF) & (dist[us] + we == dv)
            a1 = np.where(tight, (a1 + c1[us]) % p1, a1)
            a2 = np.where(tight, (a2 + c2[us]) % p2, a2)
        c1[level] = a1
        c2[level] = a2
    return c1, c2


def product_matches(xa1, xa2, yb1, yb2, tot1, tot2, p1, p2):
    p1, p2, tot1, tot2 = int(p1), int(p2), int(tot1), int(tot2)
    m1 = np.array([int(a) * int(b) % p1 == tot1 for a, b in zip(xa1, yb1)], dtype=bool)
    m2 = np.array([int(a) * int(b) % p2 == tot2 for a, b in zip(xa2, yb2)], dtype=bool)
    return m1, m2


def union_find_labels(n_vertices, edge_u, edge_v, open_mask):
    open_mask = np.asarray(open_mask, dtype=bool)
    u = edge_u[open_mask]
    v = edge_v[open_mask]
    g = coo_matrix((np.ones(len(u), dtype=np.int8), (u, v)), shape=(n_vertices, n_vertices))
    _, comp = connected_components(g, directed=False)
    smallest = np.full(comp.max() + 1, n_vertices, dtype=np.int64)
    np.minimum.at(smallest, comp, np.arange(n_vertices, dtype=np.int64))
    return smallest[comp]


def _open_graph(nbr, nbr_edge, open_mask, vertex_ok):
    nv, deg = nbr.shape
    rows = np.repeat(np.arange(nv), deg)
    cols = nbr.ravel()
    edges = nbr_edge.ravel()
    keep = cols >= 0
    rows, cols, edges = rows[keep], cols[keep], edges[keep]
    keep = open_mask[edges] & vertex_ok[rows] & vertex_ok[cols]
    return coo_matrix(
        (np.ones(keep.sum(), dtype=np.int8), (rows[keep], cols[keep])), shape=(nv, nv)
    ).tocsr()


def w_event(nbr, nbr_edge, open_mask, inner, limit, hub_rank=None):
    nv = nbr.shape[0]
    inner = np.asarray(inner, dtype=bool)
    open_mask = np.asarray(open_mask, dtype=bool)
    g_in = _open_graph(nbr, nbr_edge, open_mask, inner)
    _, comp = connected_components(g_in, directed=False)
    sizes = np.bincount(comp[inner], minlength=comp.max() + 1)
    sources = np.flatnonzero(inner & (sizes[comp] >= 2))
    if sources.size == 0:
        return True
    g_all = _open_graph(nbr, nbr_edge, open_mask, np.ones(nv, dtype=bool))
    dmat = shortest_path(g_all, unweighted=True, indices=sources, directed=False)
    same = comp[sources][:, None] == comp[None, :]
    same &= inner[None, :]
    return bool(np.all(dmat[same] <= limit))


def max_animal(nbr, nbr_edge, value, origin, L):
    deg = nbr.shape[1]
    nbr_l = nbr.tolist()
    edge_l = nbr_edge.tolist()
    val = [int(x) for x in value]
    vmax = max(val) if val else 0
    best = [0, [int(origin)]]
    path = [int(origin)]
    on_path = {int(origin)}

    def dfs(v, s, depth):
        if s > best[0]:
            best[0] = s
            best[1] = list(path)
        if depth == L or s + (L - depth) * vmax <= best[0]:
            return
        for j in range(deg):
            u = nbr_l[v][j]
            if u < 0 or u in on_path:
                continue
            on_path.add(u)
            path.append(u)
            dfs(u, s + val[edge_l[v][j]], depth + 1)
            path.pop()
            on_path.discard(u)

    dfs(int(origin), 0, 0)
    return np.int64(best[0]), np.array(best[1], dtype=np.int64)


def bridge_tree(nbr, nbr_edge, open_mask, root, boundary):
    """Plain-Python iterative version of the compiled bridge search."""
    nv, deg = nbr.shape
    nbr_l = nbr.tolist()
    edge_l = nbr_edge.tolist()
    open_l = np.asarray(open_mask, dtype=bool).tolist()
    bnd = np.asarray(boundary, dtype=bool).tolist()
    tin = [-1] * nv
    low = [0] * nv
    sub = [0] * nv
    bsub = [0] * nv
    bridge_child = np.full(len(open_l), -1, dtype=np.int64)
    root = int(root)
    tin[root] = 0
    sub[root] = 1
    bsub[root] = int(bnd[root])
    timer = 1
    stack = [[root, -1, 0]]
    while stack:
        frame = stack[-1]
        v, pe, j = frame
        if j < deg:
            frame[2] = j + 1
            u = nbr_l[v][j]
            if u < 0:
                continue
            e = edge_l[v][j]
            if not open_l[e] or e == pe:
                continue
            if tin[u] < 0:
                tin[u] = low[u] = timer
                timer += 1
                sub[u] = 1
                bsub[u] = int(bnd[u])
                stack.append([u, e, 0])
            elif tin[u] < low[v]:
                low[v] = tin[u]
        else:
            stack.pop()
            if stack:
                p = stack[-1][0]
                low[p] = min(low[p], low[v])
                sub[p] += sub[v]
                bsub[p] += bsub[v]
                if low[v] > tin[p]:
                    bridge_child[pe] = v
    return (np.array(tin, dtype=np.int64), np.array(sub, dtype=np.int64),
            np.array(bsub, dtype=np.int64), bridge_child)


def trace_path(nbr, nbr_edge, w, dist, target):
    """Vertices of one shortest path ending at ``target``, smallest-index predecessors."""
    path = [int(target)]
    v = int(target)
    while dist[v] > 0:
        u = nbr[v]
        we = np.where(u >= 0, w[nbr_edge[v]], 0)
        ok = (u >= 0) & (we > 0) & (dist[np.maximum(u, 0)] + we == dist[v])
        v = int(u[ok].min())
        path.append(v)
    return np.array(path[::-1], dtype=np.int64)
