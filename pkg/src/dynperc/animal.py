"""Greedy lattice animals over finitely dependent Bernoulli edge fields."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .environment import CoupledEnvironment
from .lattice import Grid
from .radius import hat_radius

EXACT_MAX_L = 14


@dataclass(frozen=True)
class AnimalField:
    """Edge indicators I_{e,N} on Λ_L around the origin.

    ``values`` is indexed by the edge ids of ``grid``; ``q`` is the largest
    marginal probability of an indicator (known exactly for synthetic fields,
    estimated for derived ones).
    """
    grid: Grid
    N: int
    values: np.ndarray
    q: float
    synthetic: bool = True

    @property
    def origin(self) -> int:
        return int(self.grid.index(np.zeros(self.grid.d, dtype=np.int64)))


@dataclass(frozen=True)
class AnimalResult:
    L: int
    N: int
    value: int
    witness: tuple          # vertex coordinates, starting at the origin
    exact: bool


def _animal_grid(d: int, L: int) -> Grid:
    return Grid((2 * L + 1,) * d, (-L,) * d)


def synthetic_field(d: int, L: int, N: int, q: float, rng: np.random.Generator,
                    dependence: int = 1) -> AnimalField:
    """Block field: Z^d is cut into cubes of side ``dependence * N`` (randomly
    shifted) and every edge copies the Bernoulli(q) variable of the cube
    holding its smaller endpoint.  Edges whose lower endpoints are at
    ∞-distance ≥ dependence·N therefore sit in different cubes and are
    independent.
    """
    grid = _animal_grid(d, L)
    side = max(1, dependence * N)
    shift = rng.integers(0, side, size=d)
    xe = grid.coords(grid.edge_u)
    block = np.floor_divide(xe + shift, side)
    keys, inv = np.unique(block, axis=0, return_inverse=True)
    bits = rng.random(len(keys)) < q
    return AnimalField(grid, N, bits[inv.ravel()].astype(np.int64), float(q), True)


def derived_field(env: CoupledEnvironment, t: float, C_star: int, L: int, N: int) -> AnimalField:
    """I_{e,N} = 1{N-1 ≤ ĥr_e < N} for the edges of Λ_L around the origin."""
    lat = env.lattice
    grid = _animal_grid(lat.d, L)
    vals = np.zeros(grid.n_edges, dtype=np.int64)
    for k in range(grid.n_edges):
        x = grid.coords(grid.edge_u[k])
        e = lat.edge_id(x, int(grid.edge_axis[k]))
        h = hat_radius(env, e, t, C_star)
        vals[k] = int(N - 1 <= h < N)
    return AnimalField(grid, N, vals, float(vals.mean()), False)


def greedy_animal(field: AnimalField, L: int, exact_max: int = EXACT_MAX_L,
                  beam: int = 2000) -> AnimalResult:
    """Largest indicator sum over self-avoiding paths of length ≤ L from the origin.

    Exact depth-first search when ``L <= exact_max``, otherwise a beam-search
    lower bound flagged as inexact.
    """
    g = field.grid
    if L > (g.shape[0] - 1) // 2:
        raise ValueError("field window is smaller than L")
    if L <= exact_max:
        best, path = kernels.max_animal(g.nbr, g.nbr_edge, field.values, field.origin, L)
        exact = True
    else:
        best, path = _beam_animal(g, field.values, field.origin, L, beam)
        exact = False
    witness = tuple(tuple(c) for c in g.coords(path).tolist())
    return AnimalResult(L, field.N, int(best), witness, exact)


def _beam_animal(g: Grid, values: np.ndarray, origin: int, L: int, beam: int):
    states = [(0, (origin,))]
    best = states[0]
    for _ in range(L):
        nxt = []
        for s, path in states:
            v = path[-1]
            for j in range(g.nbr.shape[1]):
                u = int(g.nbr[v, j])
                if u < 0 or u in path:
                    continue
                nxt.append((s + int(values[g.nbr_edge[v, j]]), path + (u,)))
        if not nxt:
            break
        nxt.sort(key=lambda x: -x[0])
        states = nxt[:beam]
        if states[0][0] > best[0]:
            best = states[0]
    return best[0], np.array(best[1], dtype=np.int64)


def brute_force_animal(field: AnimalField, L: int) -> int:
    """Independent reference: plain recursion over coordinate tuples."""
    g = field.grid
    d = g.d
    val = {}
    for k in range(g.n_edges):
        a, b = g.edge_pair(k)
        val[frozenset((a, b))] = int(field.values[k])
    steps = [tuple(s if i == a else 0 for i in range(d)) for a in range(d) for s in (1, -1)]

    def walk(x, seen, left):
        best = 0
        if left == 0:
            return 0
        for s in steps:
            y = tuple(xi + si for xi, si in zip(x, s))
            if y in seen:
                continue
            seen.add(y)
            best = max(best, val[frozenset((x, y))] + walk(y, seen, left - 1))
            seen.discard(y)
        return best

    o = (0,) * d
    return walk(o, {o}, L)


def witness_sum(field: AnimalField, result: AnimalResult) -> int:
    g = field.grid
    total = 0
    for a, b in zip(result.witness, result.witness[1:]):
        total += int(field.values[g.edge_between(int(g.index(a)), int(g.index(b)))])
    return total


@dataclass(frozen=True)
class AnimalRow:
    L: int
    N: int
    q: float
    mean: float
    se: float
    ratio: float
    samples: int


def animal_bound_check(d: int, Ls, Ns, q: float, samples: int, seed: int = 0,
                       dependence: int = 1) -> list[AnimalRow]:
    """Table of E[Γ_{L,N}] / (L N^d q^{1/d}) over synthetic block fields."""
    from .lattice import rng_stream

    rows = []
    for N in Ns:
        for L in Ls:
            vals = np.empty(samples)
            for s in range(samples):
                rng = rng_stream(seed, "animal", N, L, s)
                f = synthetic_field(d, L, N, q, rng, dependence)
                vals[s] = greedy_animal(f, L).value
            mean = float(vals.mean())
            se = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else float("nan")
            scale = L * N**d * q ** (1.0 / d)
            rows.append(AnimalRow(L, N, q, mean, se, mean / scale if scale > 0 else 0.0, samples))
    return rows


@dataclass(frozen=True)
class GeodesicMomentRow:
    n: int
    mean_length: float
    moment: float        # E[(Σ_{e∈γ} ĥr_e^2)^2] / E[|γ|]^2
    se: float
    samples: int


def geodesic_second_moment(params, ns, samples: int, t: float) -> list[GeodesicMomentRow]:
    """E[(Σ_{e∈γ} ĥr_e^2)^2] / L^2 along canonical truncated geodesics, L = E|γ|."""
    from .environment import TRUNCATED, sample_environment
    from .geodesics import geodesic_summary
    from .lattice import build_lattice
    from .percolation import label_clusters, regularize

    rows = []
    for n in ns:
        p = params.replace(n=n, side=None, M=None, margin=None)
        lat = build_lattice(p)
        C = p.C_star
        sums = []
        lengths = []
        for i in range(samples):
            env = sample_environment(lat, p, i)
            view = env.view(0.0, TRUNCATED)
            lab = label_clusters(view)
            a = regularize(lab, np.zeros(p.d, dtype=np.int64)).index
            b = regularize(lab, np.asarray(p.target)).index
            path = geodesic_summary(view, a, b, method="auto").canonical_path(lat)
            h = np.array([hat_radius(env, int(e), t, C) for e in path], dtype=float)
            sums.append(float(np.sum(h**2)))
            lengths.append(len(path))
        s = np.asarray(sums)
        Lm = float(np.mean(lengths))
        sq = s**2 / Lm**2
        rows.append(GeodesicMomentRow(n, Lm, float(sq.mean()),
                                      float(sq.std(ddof=1) / math.sqrt(samples)), samples))
    return rows


__all__ = [
    "EXACT_MAX_L", "AnimalField", "AnimalResult", "AnimalRow", "GeodesicMomentRow",
    "synthetic_field", "derived_field", "greedy_animal", "brute_force_animal", "witness_sum",
    "animal_bound_check", "geodesic_second_moment",
]
