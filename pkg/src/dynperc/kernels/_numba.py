"""numba-compiled graph kernels.

All kernels work on a grid given by its neighbour table ``nbr`` (vertex x
direction, -1 where the box ends) and the matching edge table ``nbr_edge``.
Edge weights are int64 with -1 meaning the edge is absent.
"""
from __future__ import annotations

import numpy as np
from numba import njit

INF = np.int64(1) << np.int64(60)


@njit(cache=True)
def sssp(nbr, nbr_edge, w, sources, maxw, removed_edge, allowed, stop_vertex):
    """Dial bucket-queue shortest paths for small non-negative integer weights.

    Returns ``(dist, order)``: ``dist`` is INF for unreached vertices and
    ``order`` lists settled vertices by non-decreasing distance.  With
    ``stop_vertex >= 0`` the search halts once that vertex is settled.
    """
    nv = nbr.shape[0]
    deg = nbr.shape[1]
    use_mask = allowed.shape[0] > 0
    dist = np.full(nv, INF, dtype=np.int64)
    settled = np.zeros(nv, dtype=np.bool_)
    order = np.empty(nv, dtype=np.int64)
    nb = maxw + 1
    head = np.full(nb, -1, dtype=np.int64)
    cap = nv + deg * nv + sources.shape[0] + 1
    ent_v = np.empty(cap, dtype=np.int64)
    ent_next = np.empty(cap, dtype=np.int64)
    n_ent = 0
    pending = 0
    for i in range(sources.shape[0]):
        s = sources[i]
        if use_mask and allowed[s] == 0:
            continue
        if dist[s] == 0:
            continue
        dist[s] = 0
        ent_v[n_ent] = s
        ent_next[n_ent] = head[0]
        head[0] = n_ent
        n_ent += 1
        pending += 1
    n_set = 0
    cur = np.int64(0)
    while pending > 0:
        b = cur % nb
        while head[b] >= 0:
            k = head[b]
            head[b] = ent_next[k]
            pending -= 1
            v = ent_v[k]
            if settled[v] or dist[v] != cur:
                continue
            settled[v] = True
            order[n_set] = v
            n_set += 1
            if v == stop_vertex:
                return dist, order[:n_set]
            for j in range(deg):
                u = nbr[v, j]
                if u < 0 or settled[u]:
                    continue
                e = nbr_edge[v, j]
                if e == removed_edge:
                    continue
                we = w[e]
                if we < 0:
                    continue
                if use_mask and allowed[u] == 0:
                    continue
                nd = cur + we
                if nd < dist[u]:
                    dist[u] = nd
                    bb = nd % nb
                    ent_v[n_ent] = u
                    ent_next[n_ent] = head[bb]
                    head[bb] = n_ent
                    n_ent += 1
                    pending += 1
        cur += 1
    return dist, order[:n_set]


@njit(cache=True)
def count_geodesics(dist, order, nbr, nbr_edge, w, p1, p2):
    """Number of shortest paths from the source(s) to each vertex, mod p1 and p2.

    Needs strictly positive weights so that ``order`` is a topological order
    of the tight-edge DAG.
    """
    nv = nbr.shape[0]
    deg = nbr.shape[1]
    c1 = np.zeros(nv, dtype=np.uint64)
    c2 = np.zeros(nv, dtype=np.uint64)
    for i in range(order.shape[0]):
        v = order[i]
        dv = dist[v]
        if dv == 0:
            c1[v] = 1
            c2[v] = 1
            continue
        a1 = np.uint64(0)
        a2 = np.uint64(0)
        for j in range(deg):
            u = nbr[v, j]
            if u < 0:
                continue
            we = w[nbr_edge[v, j]]
            if we <= 0 or dist[u] >= INF:
                continue
            if dist[u] + we == dv:
                a1 = (a1 + c1[u]) % p1
                a2 = (a2 + c2[u]) % p2
        c1[v] = a1
        c2[v] = a2
    return c1, c2


@njit(cache=True)
def _mulmod(a, b, m):
    res = np.uint64(0)
    a = a % m
    while b > 0:
        if b & np.uint64(1):
            res = (res + a) % m
        a = (a + a) % m
        b = b >> np.uint64(1)
    return res


@njit(cache=True)
def product_matches(xa1, xa2, yb1, yb2, tot1, tot2, p1, p2):
    """Per candidate edge, whether count_a(x)*count_b(y) equals the total mod each prime."""
    k = xa1.shape[0]
    m1 = np.zeros(k, dtype=np.bool_)
    m2 = np.zeros(k, dtype=np.bool_)
    for i in range(k):
        m1[i] = _mulmod(xa1[i], yb1[i], p1) == tot1
        m2[i] = _mulmod(xa2[i], yb2[i], p2) == tot2
    return m1, m2


@njit(cache=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True)
def union_find_labels(n_vertices, edge_u, edge_v, open_mask):
    """Cluster label of every vertex = smallest vertex index of its open cluster."""
    parent = np.arange(n_vertices, dtype=np.int64)
    for e in range(edge_u.shape[0]):
        if not open_mask[e]:
            continue
        a = _find(parent, edge_u[e])
        b = _find(parent, edge_v[e])
        if a == b:
            continue
        if a < b:
            parent[b] = a
        else:
            parent[a] = b
    labels = np.empty(n_vertices, dtype=np.int64)
    for v in range(n_vertices):
        labels[v] = _find(parent, v)
    return labels


@njit(cache=True)
def _bfs(nbr, nbr_edge, open_mask, x, limit, dist, queue, touched):
    deg = nbr.shape[1]
    nt = 0
    qh = 0
    qt = 0
    dist[x] = 0
    queue[qt] = x
    qt += 1
    touched[nt] = x
    nt += 1
    while qh < qt:
        v = queue[qh]
        qh += 1
        if limit >= 0 and dist[v] >= limit:
            continue
        for j in range(deg):
            u = nbr[v, j]
            if u < 0 or dist[u] >= 0 or not open_mask[nbr_edge[v, j]]:
                continue
            dist[u] = dist[v] + 1
            queue[qt] = u
            qt += 1
            touched[nt] = u
            nt += 1
    return nt


@njit(cache=True)
def w_event(nbr, nbr_edge, open_mask, inner, limit, hub_rank):
    """True iff open-connected pairs inside ``inner`` are within ``limit`` in the window.

    ``inner`` marks the vertices of the inner box; pairs are compared only when
    they are connected by an open path that stays inside it.  Each component
    is first tested through a hub (its member of smallest ``hub_rank``): a
    member x with d(hub, x) + max_y d(hub, y) <= limit needs no search of its own.
    """
    nv = nbr.shape[0]
    deg = nbr.shape[1]
    parent = np.arange(nv, dtype=np.int64)
    for v in range(nv):
        if not inner[v]:
            continue
        for j in range(deg):
            u = nbr[v, j]
            if u < 0 or u < v or not inner[u] or not open_mask[nbr_edge[v, j]]:
                continue
            a = _find(parent, v)
            b = _find(parent, u)
            if a != b:
                if a < b:
                    parent[b] = a
                else:
                    parent[a] = b
    comp = np.empty(nv, dtype=np.int64)
    for v in range(nv):
        comp[v] = _find(parent, v)
    start = np.zeros(nv + 1, dtype=np.int64)
    for v in range(nv):
        if inner[v]:
            start[comp[v] + 1] += 1
    for v in range(nv):
        start[v + 1] += start[v]
    fill = start[:-1].copy()
    members = np.empty(start[nv], dtype=np.int64)
    for v in range(nv):
        if inner[v]:
            members[fill[comp[v]]] = v
            fill[comp[v]] += 1

    dist = np.full(nv, -1, dtype=np.int64)
    hub_dist = np.full(nv, -1, dtype=np.int64)
    queue = np.empty(nv, dtype=np.int64)
    touched = np.empty(nv, dtype=np.int64)
    for c in range(nv):
        lo = start[c]
        hi = start[c + 1]
        if hi - lo < 2:
            continue
        hub = members[lo]
        for k in range(lo, hi):
            if hub_rank[members[k]] < hub_rank[hub]:
                hub = members[k]
        nt = _bfs(nbr, nbr_edge, open_mask, hub, -1, dist, queue, touched)
        ecc = 0
        for k in range(lo, hi):
            hub_dist[members[k]] = dist[members[k]]
            if dist[members[k]] > ecc:
                ecc = dist[members[k]]
        for k in range(nt):
            dist[touched[k]] = -1
        for k in range(lo, hi):
            x = members[k]
            if hub_dist[x] + ecc <= limit:
                continue
            nt = _bfs(nbr, nbr_edge, open_mask, x, limit, dist, queue, touched)
            ok = True
            for kk in range(lo, hi):
                if dist[members[kk]] < 0:
                    ok = False
                    break
            for kk in range(nt):
                dist[touched[kk]] = -1
            if not ok:
                return False
    return True


@njit(cache=True)
def max_animal(nbr, nbr_edge, value, origin, L):
    """Exact maximum of the edge-value sum over self-avoiding paths of length <= L.

    Depth-first search with the bound ``current + remaining * max_value``.
    Returns the best sum and the vertex sequence of a witness path.
    """
    nv = nbr.shape[0]
    deg = nbr.shape[1]
    vmax = np.int64(0)
    for e in range(value.shape[0]):
        if value[e] > vmax:
            vmax = value[e]
    on_path = np.zeros(nv, dtype=np.bool_)
    path = np.empty(L + 1, dtype=np.int64)
    choice = np.zeros(L + 1, dtype=np.int64)
    sums = np.zeros(L + 1, dtype=np.int64)
    best = np.int64(0)
    best_path = np.empty(L + 1, dtype=np.int64)
    best_path[0] = origin
    best_len = 0
    path[0] = origin
    on_path[origin] = True
    depth = 0
    choice[0] = 0
    while depth >= 0:
        if sums[depth] > best:
            best = sums[depth]
            best_len = depth
            for k in range(depth + 1):
                best_path[k] = path[k]
        advanced = False
        if depth < L and sums[depth] + (L - depth) * vmax > best:
            v = path[depth]
            while choice[depth] < deg:
                j = choice[depth]
                choice[depth] += 1
                u = nbr[v, j]
                if u < 0 or on_path[u]:
                    continue
                depth += 1
                path[depth] = u
                on_path[u] = True
                sums[depth] = sums[depth - 1] + value[nbr_edge[v, j]]
                choice[depth] = 0
                advanced = True
                break
        if not advanced:
            on_path[path[depth]] = False
            depth -= 1
    return best, best_path[: best_len + 1].copy()


@njit(cache=True)
def bridge_tree(nbr, nbr_edge, open_mask, root, boundary):
    """Depth-first tree of the open cluster of ``root`` with its bridges.

    Returns ``(tin, sub, bsub, bridge_child)``: entry time (-1 outside the
    cluster), subtree size, number of ``boundary`` vertices in the subtree,
    and for every bridge edge the endpoint on the subtree side (-1 otherwise).
    """
    nv = nbr.shape[0]
    deg = nbr.shape[1]
    ne = open_mask.shape[0]
    tin = np.full(nv, -1, dtype=np.int64)
    low = np.zeros(nv, dtype=np.int64)
    sub = np.zeros(nv, dtype=np.int64)
    bsub = np.zeros(nv, dtype=np.int64)
    bridge_child = np.full(ne, -1, dtype=np.int64)
    stk_v = np.empty(nv, dtype=np.int64)
    stk_e = np.empty(nv, dtype=np.int64)
    stk_j = np.empty(nv, dtype=np.int64)
    timer = 0
    top = 0
    stk_v[0] = root
    stk_e[0] = -1
    stk_j[0] = 0
    tin[root] = 0
    low[root] = 0
    sub[root] = 1
    bsub[root] = 1 if boundary[root] else 0
    timer = 1
    while top >= 0:
        v = stk_v[top]
        j = stk_j[top]
        if j < deg:
            stk_j[top] = j + 1
            u = nbr[v, j]
            if u < 0:
                continue
            e = nbr_edge[v, j]
            if not open_mask[e] or e == stk_e[top]:
                continue
            if tin[u] < 0:
                tin[u] = timer
                low[u] = timer
                timer += 1
                sub[u] = 1
                bsub[u] = 1 if boundary[u] else 0
                top += 1
                stk_v[top] = u
                stk_e[top] = e
                stk_j[top] = 0
            elif tin[u] < low[v]:
                low[v] = tin[u]
        else:
            pe = stk_e[top]
            top -= 1
            if top >= 0:
                p = stk_v[top]
                if low[v] < low[p]:
                    low[p] = low[v]
                sub[p] += sub[v]
                bsub[p] += bsub[v]
                if low[v] > tin[p]:
                    bridge_child[pe] = v
    return tin, sub, bsub, bridge_child


@njit(cache=True)
def trace_path(nbr, nbr_edge, w, dist, target):
    """Vertices of one shortest path ending at ``target``, smallest-index predecessors."""
    deg = nbr.shape[1]
    out = np.empty(dist[target] + 1, dtype=np.int64)
    n = 0
    v = target
    out[n] = v
    n += 1
    while dist[v] > 0:
        best = -1
        for j in range(deg):
            u = nbr[v, j]
            if u < 0:
                continue
            we = w[nbr_edge[v, j]]
            if we > 0 and dist[u] + we == dist[v] and (best < 0 or u < best):
                best = u
        v = best
        out[n] = v
        n += 1
    return out[:n][::-1].copy()
