"""Finite-box lattice geometry, edge indexing and seeded random streams."""
from __future__ import annotations

import math
import warnings
import zlib
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

DEFAULT_T_GRID = (0.0, 0.001, 0.005, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0)


class LatticeError(ValueError):
    pass


def default_truncation(n: int) -> int:
    """M = floor((ln n)^2), never below 2."""
    return max(2, int(math.floor(math.log(n) ** 2))) if n > 1 else 2


@dataclass(frozen=True)
class SimulationParams:
    d: int = 2
    p: float = 0.6
    n: int = 64
    side: int | None = None
    x_dir: tuple[int, ...] | None = None
    M: int | None = None
    C_star: int | None = None
    seed: int = 0
    samples: int = 100
    t_grid: tuple[float, ...] = DEFAULT_T_GRID
    margin: int | None = None

    def __post_init__(self) -> None:
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        if self.d < 2:
            raise LatticeError("d must be >= 2")
        if not 0.0 <= self.p <= 1.0:
            raise LatticeError(f"p must lie in [0, 1], got {self.p}")
        if self.n < 1:
            raise LatticeError("n must be >= 1")
        x_dir = tuple(int(v) for v in (self.x_dir or (1,) + (0,) * (self.d - 1)))
        if len(x_dir) != self.d or not any(x_dir):
            raise LatticeError(f"x_dir must be a non-zero integer vector of length {self.d}")
        set_("x_dir", x_dir)
        if self.M is None:
            set_("M", default_truncation(self.n))
        if self.M < 2:
            raise LatticeError("M must be >= 2")
        if self.C_star is None:
            set_("C_star", 8 * self.d)
        if self.C_star < 4:
            raise LatticeError("C_star must be >= 4")
        if self.C_star < 6 * self.d:
            warnings.warn(
                f"C_star={self.C_star} < 6d={6 * self.d}: the bypass-distance event "
                "cannot hold even in the all-open configuration",
                stacklevel=3,
            )
        if self.margin is None:
            set_("margin", int(math.ceil(math.sqrt(self.n))))
        span = self.n * max(abs(v) for v in x_dir)
        if self.side is None:
            set_("side", span + self.margin)
        if self.side < span + self.margin:
            raise LatticeError(
                f"side={self.side} too small: endpoints need side >= {span} + margin {self.margin}"
            )
        if self.samples < 0:
            raise LatticeError("samples must be >= 0")
        t_grid = tuple(float(t) for t in self.t_grid)
        if any(not 0.0 <= t <= 1.0 for t in t_grid) or list(t_grid) != sorted(t_grid):
            raise LatticeError("t_grid must be sorted and within [0, 1]")
        set_("t_grid", t_grid)
        if not 0 <= self.seed < 2**64:
            raise LatticeError("seed must be an unsigned 64-bit integer")

    @property
    def target(self) -> tuple[int, ...]:
        return tuple(self.n * v for v in self.x_dir)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["x_dir"] = list(self.x_dir)
        out["t_grid"] = list(self.t_grid)
        return out

    def replace(self, **changes) -> "SimulationParams":
        data = self.to_dict()
        data.update(changes)
        return SimulationParams(**data)


@lru_cache(maxsize=64)
def _grid_tables(shape: tuple[int, ...]):
    d = len(shape)
    nv = int(np.prod(shape))
    strides = np.array([int(np.prod(shape[a + 1:])) for a in range(d)], dtype=np.int64)
    coords = np.stack(np.unravel_index(np.arange(nv, dtype=np.int64), shape), axis=1)

    offsets = [0]
    eu, ev, eax = [], [], []
    for a in range(d):
        sa = tuple(s - 1 if b == a else s for b, s in enumerate(shape))
        ca = np.stack(np.unravel_index(np.arange(int(np.prod(sa)), dtype=np.int64), sa), axis=1)
        u = ca @ strides
        eu.append(u)
        ev.append(u + strides[a])
        eax.append(np.full(len(u), a, dtype=np.int8))
        offsets.append(offsets[-1] + len(u))
    edge_u = np.concatenate(eu)
    edge_v = np.concatenate(ev)
    edge_axis = np.concatenate(eax)
    offsets = np.array(offsets, dtype=np.int64)

    nbr = np.full((nv, 2 * d), -1, dtype=np.int64)
    nbr_edge = np.full((nv, 2 * d), -1, dtype=np.int64)
    ids = np.arange(len(edge_u), dtype=np.int64)
    for a in range(d):
        sel = slice(offsets[a], offsets[a + 1])
        nbr[edge_u[sel], 2 * a] = edge_v[sel]
        nbr_edge[edge_u[sel], 2 * a] = ids[sel]
        nbr[edge_v[sel], 2 * a + 1] = edge_u[sel]
        nbr_edge[edge_v[sel], 2 * a + 1] = ids[sel]
    for arr in (coords, edge_u, edge_v, edge_axis, offsets, nbr, nbr_edge, strides):
        arr.setflags(write=False)
    return coords, strides, edge_u, edge_v, edge_axis, offsets, nbr, nbr_edge


class Grid:
    """Axis-aligned box of Z^d with compact vertex and edge indices.

    Vertex indices follow C order, so comparing indices compares coordinates
    lexicographically.  Edge ids are grouped by axis; within an axis the edge
    ``(x, x + e_a)`` is indexed by ``x`` in the box shortened along ``a``.
    """

    def __init__(self, shape: Sequence[int], origin: Sequence[int]):
        self.shape = tuple(int(s) for s in shape)
        self.d = len(self.shape)
        self.origin = np.asarray(origin, dtype=np.int64)
        (
            self._coords,
            self.strides,
            self.edge_u,
            self.edge_v,
            self.edge_axis,
            self.axis_offsets,
            self.nbr,
            self.nbr_edge,
        ) = _grid_tables(self.shape)
        self.n_vertices = int(np.prod(self.shape))
        self.n_edges = len(self.edge_u)

    def coords(self, v) -> np.ndarray:
        return self._coords[v] + self.origin

    def contains(self, x) -> bool:
        local = np.asarray(x, dtype=np.int64) - self.origin
        return bool(np.all(local >= 0) and np.all(local < np.asarray(self.shape)))

    def index(self, x) -> int | np.ndarray:
        local = np.asarray(x, dtype=np.int64) - self.origin
        if np.any(local < 0) or np.any(local >= np.asarray(self.shape)):
            raise LatticeError(f"vertex {tuple(np.asarray(x).tolist())} outside the box")
        return local @ self.strides

    def edge_id(self, x, axis: int) -> int:
        """Id of the edge joining ``x`` and ``x + e_axis``."""
        local = np.asarray(x, dtype=np.int64) - self.origin
        sa = tuple(s - 1 if b == axis else s for b, s in enumerate(self.shape))
        if np.any(local < 0) or np.any(local >= np.asarray(sa)):
            raise LatticeError("edge outside the box")
        return int(self.axis_offsets[axis] + np.ravel_multi_index(tuple(local), sa))

    def edge_between(self, u: int, v: int) -> int:
        for k in range(2 * self.d):
            if self.nbr[u, k] == v:
                return int(self.nbr_edge[u, k])
        raise LatticeError(f"vertices {u} and {v} are not nearest neighbours")

    def edge_pair(self, e: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Edge as ``(x_e, y_e)``; ``x_e`` is the lexicographically smaller end."""
        return (
            tuple(self.coords(self.edge_u[e]).tolist()),
            tuple(self.coords(self.edge_v[e]).tolist()),
        )

    def edges_inside(self, lo, hi) -> np.ndarray:
        """Edges with both endpoints in the coordinate box ``[lo, hi]``."""
        cu = self._coords[self.edge_u] + self.origin
        cv = self._coords[self.edge_v] + self.origin
        lo = np.asarray(lo)
        hi = np.asarray(hi)
        ok = np.all((cu >= lo) & (cu <= hi) & (cv >= lo) & (cv <= hi), axis=1)
        return np.flatnonzero(ok)


class BoxLattice(Grid):
    """The box Λ_side = [-side, side]^d."""

    def __init__(self, d: int, side: int):
        if d < 2:
            raise LatticeError("d must be >= 2")
        if side < 1:
            raise LatticeError("side must be >= 1")
        super().__init__((2 * side + 1,) * d, (-side,) * d)
        self.side = int(side)

    @property
    def boundary(self) -> np.ndarray:
        c = self._coords
        return np.flatnonzero(np.any((c == 0) | (c == 2 * self.side), axis=1))

    def window(self, center, radius: int) -> "Window":
        return Window(self, center, radius)

    def __repr__(self) -> str:
        return f"BoxLattice(d={self.d}, side={self.side})"


class Window:
    """Sub-box Λ_radius(center) ∩ box with local indices mapped to the parent."""

    def __init__(self, lattice: BoxLattice, center, radius: int):
        center = np.asarray(center, dtype=np.int64)
        lo = np.maximum(center - radius, -lattice.side)
        hi = np.minimum(center + radius, lattice.side)
        self.center = center
        self.radius = int(radius)
        self.clipped = bool(np.any(lo != center - radius) or np.any(hi != center + radius))
        self.lo, self.hi = lo, hi
        self.grid = Grid(hi - lo + 1, lo)
        vpat, epat, eaxis = _window_pattern(lattice.shape, self.grid.shape)
        shift = lo - lattice.origin
        self.vertices = vpat + int(shift @ lattice.strides)
        # parent edge id of each local edge (x, x + e_a)
        self.edges = epat + _edge_shift(lattice, shift)[eaxis]
        self._rel = tuple((center - lo).tolist())

    def local_index(self, x) -> int:
        return int(self.grid.index(x))

    def linf(self) -> np.ndarray:
        """∞-norm distance of every local vertex to the window center."""
        return _linf_pattern(self.grid.shape, self._rel)


def _axis_strides(shape: tuple[int, ...], a: int) -> np.ndarray:
    sa = tuple(s - 1 if b == a else s for b, s in enumerate(shape))
    return np.array([int(np.prod(sa[b + 1:])) for b in range(len(sa))], dtype=np.int64)


@lru_cache(maxsize=256)
def _window_pattern(parent_shape: tuple[int, ...], shape: tuple[int, ...]):
    coords, _, edge_u, _, _, offsets, _, _ = _grid_tables(shape)
    _, pstrides, _, _, _, poffsets, _, _ = _grid_tables(parent_shape)
    vpat = coords @ pstrides
    epat = np.empty(len(edge_u), dtype=np.int64)
    eaxis = np.empty(len(edge_u), dtype=np.int64)
    for a in range(len(shape)):
        sel = slice(offsets[a], offsets[a + 1])
        epat[sel] = poffsets[a] + coords[edge_u[sel]] @ _axis_strides(parent_shape, a)
        eaxis[sel] = a
    for arr in (vpat, epat, eaxis):
        arr.setflags(write=False)
    return vpat, epat, eaxis


def _edge_shift(lattice: Grid, shift: np.ndarray) -> np.ndarray:
    return np.array([int(shift @ _axis_strides(lattice.shape, a)) for a in range(lattice.d)],
                    dtype=np.int64)


@lru_cache(maxsize=256)
def _linf_pattern(shape: tuple[int, ...], rel: tuple[int, ...]) -> np.ndarray:
    out = np.max(np.abs(_grid_tables(shape)[0] - np.asarray(rel)), axis=1)
    out.setflags(write=False)
    return out


def build_lattice(params: SimulationParams) -> BoxLattice:
    lattice = BoxLattice(params.d, params.side)
    for z in ((0,) * params.d, params.target):
        if not np.all(np.abs(np.asarray(z)) <= params.side - 1):
            raise LatticeError(f"endpoint {z} is not interior to the box")
    return lattice


@dataclass(frozen=True)
class EdgeWindow:
    edges: np.ndarray
    center: tuple[int, ...]
    radius: int
    clipped: bool


def edge_window(lattice: BoxLattice, e: int, radius: int) -> EdgeWindow:
    """Edges with both endpoints in Λ_radius(x_e), clipped to the box."""
    if radius < 1:
        raise LatticeError("radius must be >= 1")
    if not 0 <= e < lattice.n_edges:
        raise LatticeError(f"edge id {e} out of range")
    x_e = np.asarray(lattice.edge_pair(e)[0])
    win = lattice.window(x_e, radius)
    return EdgeWindow(np.sort(win.edges), tuple(x_e.tolist()), radius, win.clipped)


# --- random streams ---------------------------------------------------------

def _label_key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    part = int(part)
    if part < 0:
        raise ValueError("stream labels must be non-negative")
    return part


@dataclass(frozen=True)
class RngStream:
    """A named, order-independent random stream derived from a master seed."""

    seed: int
    label: tuple = field(default_factory=tuple)

    def child(self, *more) -> "RngStream":
        return RngStream(self.seed, self.label + tuple(more))

    def generator(self) -> np.random.Generator:
        key = tuple(_label_key(p) for p in self.label)
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=key)))


def rng_stream(seed: int, *label) -> np.random.Generator:
    return RngStream(seed, tuple(label)).generator()
