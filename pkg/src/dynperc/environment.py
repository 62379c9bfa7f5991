"""Coupled dynamical environments (ω, ω′, U) and their noise / truncation views."""
from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .lattice import BoxLattice, SimulationParams, rng_stream

CHEMICAL = "chemical"
TRUNCATED = "truncated"
MODES = (CHEMICAL, TRUNCATED)
CLOSED = math.inf  # chemical weight of a closed edge

_MAGIC = b"DYNENV1\n"


class EnvironmentError_(ValueError):
    pass


def params_hash(params: SimulationParams) -> str:
    blob = json.dumps(params.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class CoupledEnvironment:
    """Per-edge triples (ω_e, ω′_e, U_e) on a box; immutable once built."""

    lattice: BoxLattice
    open_0: np.ndarray
    open_prime: np.ndarray
    U: np.ndarray
    p: float
    M: int
    sample_index: int = 0
    seed: int = 0
    tag: tuple = field(default=())

    def __post_init__(self):
        ne = self.lattice.n_edges
        for name in ("open_0", "open_prime", "U"):
            arr = getattr(self, name)
            if arr.shape != (ne,):
                raise EnvironmentError_(f"{name} must have one entry per edge ({ne})")
            arr.setflags(write=False)
        if not self.tag:
            object.__setattr__(self, "tag", (self.seed, self.sample_index, id(self)))

    @classmethod
    def from_arrays(cls, lattice, open_0, open_prime=None, U=None, *, p=0.5, M=2,
                    sample_index=0, seed=0) -> "CoupledEnvironment":
        """Hand-built environment; ω′ defaults to ω and U to all ones (no resampling)."""
        open_0 = np.array(open_0, dtype=bool)
        open_prime = open_0.copy() if open_prime is None else np.array(open_prime, dtype=bool)
        U = np.full(lattice.n_edges, 1.0) if U is None else np.array(U, dtype=np.float64)
        return cls(lattice, open_0, open_prime, U, float(p), int(M), sample_index, seed)

    def view(self, t: float = 0.0, mode: str = CHEMICAL) -> "EnvironmentView":
        return view_at(self, t, mode)

    def resampled(self, t: float) -> np.ndarray:
        """Mask of edges whose state is taken from ω′ at noise level t."""
        return self.U < t


def sample_environment(lattice: BoxLattice, params: SimulationParams,
                       sample_index: int) -> CoupledEnvironment:
    ne = lattice.n_edges
    s = params.seed
    open_0 = rng_stream(s, "env", sample_index, "omega").random(ne) < params.p
    open_prime = rng_stream(s, "env", sample_index, "omega_prime").random(ne) < params.p
    U = rng_stream(s, "env", sample_index, "U").random(ne)
    return CoupledEnvironment(lattice, open_0, open_prime, U, params.p, params.M,
                              sample_index, s, (s, sample_index, params_hash(params)))


class EnvironmentView:
    """Weights of ``env`` at noise level ``t`` in one mode, with optional overrides.

    Overrides implement σ_e^a: ``a`` is 1 or ∞ in chemical mode, 1 or M in
    truncated mode.
    """

    __slots__ = ("env", "t", "mode", "overrides", "_open", "_w")

    def __init__(self, env: CoupledEnvironment, t: float, mode: str, overrides=()):
        if mode not in MODES:
            raise EnvironmentError_(f"mode must be one of {MODES}")
        if not 0.0 <= t <= 1.0:
            raise EnvironmentError_("t must lie in [0, 1]")
        self.env = env
        self.t = float(t)
        self.mode = mode
        self.overrides = tuple(sorted(dict(overrides).items()))
        self._open = None
        self._w = None

    @property
    def lattice(self) -> BoxLattice:
        return self.env.lattice

    @property
    def M(self) -> int:
        return self.env.M

    @property
    def closed_weight(self):
        return CLOSED if self.mode == CHEMICAL else self.env.M

    def _base_open(self, e):
        env = self.env
        return np.where(env.U[e] < self.t, env.open_prime[e], env.open_0[e])

    def open_mask(self) -> np.ndarray:
        if self._open is None:
            env = self.env
            m = np.where(env.U < self.t, env.open_prime, env.open_0)
            for e, a in self.overrides:
                m[e] = a == 1
            m.setflags(write=False)
            self._open = m
        return self._open

    def weights(self) -> np.ndarray:
        """int64 weights: 1 open, M closed (truncated), -1 closed (chemical)."""
        if self._w is None:
            closed = -1 if self.mode == CHEMICAL else self.env.M
            w = np.where(self.open_mask(), 1, closed).astype(np.int64)
            w.setflags(write=False)
            self._w = w
        return self._w

    def is_open(self, e: int) -> bool:
        for oe, a in self.overrides:
            if oe == e:
                return a == 1
        return bool(self._base_open(e))

    def weight(self, e: int):
        return 1 if self.is_open(e) else self.closed_weight

    def override(self, e: int, a) -> "EnvironmentView":
        if not 0 <= e < self.lattice.n_edges:
            raise EnvironmentError_(f"edge id {e} out of range")
        allowed = (1, CLOSED) if self.mode == CHEMICAL else (1, self.env.M)
        if a not in allowed:
            raise EnvironmentError_(f"override value {a!r} invalid in {self.mode} mode; use {allowed}")
        ov = dict(self.overrides)
        ov[int(e)] = a
        return EnvironmentView(self.env, self.t, self.mode, ov)

    def with_mode(self, mode: str) -> "EnvironmentView":
        if mode == self.mode:
            return self
        conv = {1: 1, CLOSED: self.env.M} if mode == TRUNCATED else {1: 1, self.env.M: CLOSED}
        return EnvironmentView(self.env, self.t, mode, {e: conv[a] for e, a in self.overrides})

    @property
    def generation(self) -> tuple:
        return self.env.tag

    def __repr__(self) -> str:
        return f"EnvironmentView(t={self.t}, mode={self.mode!r}, overrides={self.overrides})"


def view_at(env: CoupledEnvironment, t: float, mode: str = CHEMICAL) -> EnvironmentView:
    return EnvironmentView(env, t, mode)


def override(view: EnvironmentView, e: int, a) -> EnvironmentView:
    return view.override(e, a)


# --- binary dump / load -----------------------------------------------------

def dump_environment(env: CoupledEnvironment, path, params: SimulationParams | None = None) -> None:
    header = {
        "params_hash": params_hash(params) if params is not None else "",
        "d": env.lattice.d,
        "side": env.lattice.side,
        "n_edges": env.lattice.n_edges,
        "p": env.p,
        "M": env.M,
        "sample_index": env.sample_index,
        "seed": env.seed,
    }
    hb = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(hb)))
        fh.write(hb)
        fh.write(np.packbits(env.open_0).tobytes())
        fh.write(np.packbits(env.open_prime).tobytes())
        fh.write(env.U.astype("<f8").tobytes())


def load_environment(path, params: SimulationParams | None = None) -> CoupledEnvironment:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise EnvironmentError_("not an environment dump")
        (hl,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hl))
        if params is not None and header["params_hash"] != params_hash(params):
            raise EnvironmentError_("environment dump was produced with different parameters")
        ne = header["n_edges"]
        nb = (ne + 7) // 8
        o0 = np.unpackbits(np.frombuffer(fh.read(nb), dtype=np.uint8))[:ne].astype(bool)
        op = np.unpackbits(np.frombuffer(fh.read(nb), dtype=np.uint8))[:ne].astype(bool)
        U = np.frombuffer(fh.read(8 * ne), dtype="<f8").astype(np.float64)
    lattice = BoxLattice(header["d"], header["side"])
    return CoupledEnvironment(lattice, o0, op, U, header["p"], header["M"],
                              header["sample_index"], header["seed"])
