"""Monte Carlo estimates of distances, covariances and geodesic overlaps.

Each sample owns one coupled environment built from its own seeded streams;
samples are processed in fixed chunks and merged in index order, so results
do not depend on the number of worker processes.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .environment import CHEMICAL, TRUNCATED, sample_environment
from .geodesics import compare_summaries, geodesic_summary, overlap, regularized_endpoints
from .lattice import SimulationParams, build_lattice, rng_stream
from .percolation import NoGiantCluster, label_clusters
from .stats import MIN_BATCHES, batch_covariance, batch_se, batch_variance, ratio_se

MAX_REJECTION = 0.10
CHUNK = 16


class EstimationError(RuntimeError):
    pass


# --- per-sample work ----------------------------------------------------------------

@dataclass
class SampleRecord:
    """Everything measured on one sample, indexed like ``ts``."""
    index: int
    ts: tuple
    chem_distance: np.ndarray
    trunc_distance: np.ndarray
    chem_all: np.ndarray          # |π̃(t)|
    trunc_all: np.ndarray         # |π̃_M(t)|
    chem_overlap: np.ndarray      # |π̃(0) ∩ π̃(t)|
    trunc_overlap: np.ndarray
    coincide: np.ndarray          # chemical and truncated sets agree at t


def measure_sample(lattice, params: SimulationParams, index: int, ts,
                   truncated: bool = True) -> SampleRecord | None:
    """Geodesic summaries at every t for one sample; ``None`` if a view has
    no giant cluster."""
    env = sample_environment(lattice, params, index)
    z0 = np.zeros(params.d, dtype=np.int64)
    z1 = np.asarray(params.target, dtype=np.int64)
    k = len(ts)
    out = SampleRecord(index, tuple(ts), *(np.zeros(k, dtype=np.int64) for _ in range(6)),
                       np.zeros(k, dtype=bool))
    base_c = base_t = None
    for i, t in enumerate(ts):
        chem_view = env.view(t, CHEMICAL)
        try:
            a, b = regularized_endpoints(chem_view, z0, z1, label_clusters(chem_view))
        except NoGiantCluster:
            return None
        chem = geodesic_summary(chem_view, a, b)
        if base_c is None:
            base_c = chem
        out.chem_distance[i] = chem.distance
        out.chem_all[i] = chem.size_all
        out.chem_overlap[i] = overlap(base_c, chem)
        if truncated:
            trunc = geodesic_summary(env.view(t, TRUNCATED), a, b)
            if base_t is None:
                base_t = trunc
            out.trunc_distance[i] = trunc.distance
            out.trunc_all[i] = trunc.size_all
            out.trunc_overlap[i] = overlap(base_t, trunc)
            out.coincide[i] = bool(compare_summaries(chem, trunc))
    return out


def _chunk_worker(args):
    pdict, indices, ts, truncated = args
    params = SimulationParams(**_params_args(pdict))
    lat = build_lattice(params)
    return [(i, measure_sample(lat, params, i, ts, truncated)) for i in indices]


def _params_args(pdict: dict) -> dict:
    d = dict(pdict)
    d["x_dir"] = tuple(d["x_dir"])
    d["t_grid"] = tuple(d["t_grid"])
    return d


def run_chunks(fn, tasks, workers: int = 1) -> list:
    """``[fn(task) for task in tasks]``, possibly in worker processes; order kept."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as ex:
        return list(ex.map(fn, tasks))


def _chunks(first: int, n: int) -> list[list[int]]:
    idx = list(range(first, first + n))
    return [idx[i:i + CHUNK] for i in range(0, n, CHUNK)]


def collect(params: SimulationParams, ts, samples: int | None = None, workers: int = 1,
            truncated: bool = True, first: int = 0) -> tuple[list[SampleRecord], int]:
    """Records for samples ``first .. first+samples-1`` in index order, and the
    number rejected.  Raises when more than 10% are rejected."""
    n = params.samples if samples is None else samples
    if n <= 0:
        raise EstimationError("samples must be positive")
    ts = tuple(float(t) for t in ts)
    chunks = _chunks(first, n)
    pdict = params.to_dict()
    results = run_chunks(_chunk_worker, [(pdict, c, ts, truncated) for c in chunks], workers)
    records = []
    rejected = 0
    for chunk in results:
        for _, rec in chunk:
            if rec is None:
                rejected += 1
            else:
                records.append(rec)
    if rejected > MAX_REJECTION * n:
        raise EstimationError(
            f"{rejected} of {n} samples had no giant cluster (> {MAX_REJECTION:.0%}); "
            "p is too close to criticality for this box")
    return records, rejected


# --- series ------------------------------------------------------------------------

@dataclass
class EstimateSeries:
    quantity: str
    ts: tuple
    values: np.ndarray
    se: np.ndarray
    samples: int
    rejected: int

    def rows(self):
        for t, v, s in zip(self.ts, self.values, self.se):
            yield {"quantity": self.quantity, "t": t, "value": v, "se": s,
                   "samples": self.samples, "rejected": self.rejected}


def _stack(records, attr) -> np.ndarray:
    return np.array([getattr(r, attr) for r in records], dtype=float)


def _mean_series(name, ts, X, rej) -> EstimateSeries:
    return EstimateSeries(name, ts, X.mean(axis=0),
                          np.array([batch_se(X[:, j]) for j in range(X.shape[1])]), len(X), rej)


def series_from_records(records, ts, rejected: int, truncated: bool = True) -> dict:
    """Var, Cov, Corr, mean sizes and overlaps; Cov(0) is Var and Corr(0) is 1."""
    D = _stack(records, "chem_distance")
    out = {}
    var, var_se = batch_variance(D[:, 0])
    cov = np.empty(len(ts))
    cov_se = np.empty(len(ts))
    corr = np.empty(len(ts))
    corr_se = np.empty(len(ts))
    x = D[:, 0] - D[:, 0].mean()
    for j in range(len(ts)):
        cov[j], cov_se[j] = batch_covariance(D[:, 0], D[:, j])
        if var > 0:
            u = x * (D[:, j] - D[:, j].mean())
            corr[j], corr_se[j] = ratio_se(u, x * x)
        else:
            corr[j], corr_se[j] = float("nan"), float("nan")
    n = len(records)
    out["var"] = EstimateSeries("var_chem_distance", ts[:1], np.array([var]), np.array([var_se]),
                                n, rejected)
    out["cov"] = EstimateSeries("cov_chem_distance", ts, cov, cov_se, n, rejected)
    out["corr"] = EstimateSeries("corr_chem_distance", ts, corr, corr_se, n, rejected)
    out["chem_distance"] = _mean_series("mean_chem_distance", ts, D, rejected)
    out["chem_all"] = _mean_series("mean_chem_all", ts, _stack(records, "chem_all"), rejected)
    out["chem_overlap"] = _mean_series("chem_overlap", ts, _stack(records, "chem_overlap"), rejected)
    if truncated:
        out["trunc_distance"] = _mean_series("mean_trunc_distance", ts,
                                             _stack(records, "trunc_distance"), rejected)
        out["trunc_overlap"] = _mean_series("trunc_overlap", ts,
                                            _stack(records, "trunc_overlap"), rejected)
        out["coincidence"] = _mean_series("coincidence_rate", ts,
                                          _stack(records, "coincide"), rejected)
    return out


def sweep(params: SimulationParams, workers: int = 1, truncated: bool = True) -> dict:
    """All per-t series over ``params.t_grid`` (must contain 0 and 1)."""
    ts = params.t_grid
    if not ts or ts[0] != 0.0 or ts[-1] != 1.0:
        raise EstimationError("t_grid must start at 0 and end at 1")
    records, rejected = collect(params, ts, workers=workers, truncated=truncated)
    return series_from_records(records, ts, rejected, truncated)


# --- the overlap integral ------------------------------------------------------------

@dataclass(frozen=True)
class OverlapIntegral:
    value: float
    lower: float | None
    upper: float | None
    monotone: bool
    note: str = ""


def overlap_integral(ts, values, se=None, k: float = 2.0) -> OverlapIntegral:
    """Trapezoid estimate of ∫_0^1 overlap(t) dt with monotone Riemann bounds.

    The integrand is non-increasing, so the right and left Riemann sums bound
    the integral.  An increase larger than ``k`` combined standard errors
    drops the bounds and records a note.
    """
    ts = np.asarray(ts, dtype=float)
    v = np.asarray(values, dtype=float)
    if ts.size < 2 or np.any(np.diff(ts) <= 0):
        raise ValueError("need a strictly increasing grid with at least two points")
    s = np.zeros_like(v) if se is None else np.nan_to_num(np.asarray(se, dtype=float))
    h = np.diff(ts)
    trap = float(np.sum(h * (v[:-1] + v[1:]) / 2))
    rise = np.diff(v) - k * np.sqrt(s[:-1] ** 2 + s[1:] ** 2)
    if np.any(rise > 0):
        msg = "series increases beyond its error bars; bounds dropped"
        warnings.warn(msg, stacklevel=2)
        return OverlapIntegral(trap, None, None, False, msg)
    upper = float(np.sum(h * v[:-1]))
    lower = float(np.sum(h * v[1:]))
    return OverlapIntegral(trap, min(lower, upper), max(lower, upper), True)


# --- regimes ---------------------------------------------------------------------------

@dataclass
class RegimeRow:
    beta: float
    t: float | None
    corr: float
    corr_se: float
    overlap_fraction: float
    overlap_se: float
    note: str = ""


@dataclass
class RegimeReport:
    n: int
    var: float
    var_se: float
    t_hat: float
    t_hat_se: float
    mean_all: float
    samples: int
    rejected: int
    rows: list = field(default_factory=list)


def regime_sweep(params: SimulationParams, betas, workers: int = 1) -> RegimeReport:
    """Corr and overlap fraction at t = β·t̂_n, t̂_n = Var(D̃(0, nx))/n.

    Noise levels above 1 are clipped to t = 1 (full resampling) and noted.

    Both passes use the same sample indices, so every ratio comes from one
    sample pool.
    """
    base, rej0 = collect(params, (0.0,), workers=workers, truncated=False)
    D0 = _stack(base, "chem_distance")[:, 0]
    var, var_se = batch_variance(D0)
    t_hat = var / params.n
    report = RegimeReport(params.n, var, var_se, t_hat, var_se / params.n,
                          float(_stack(base, "chem_all")[:, 0].mean()), len(base), rej0)
    targets = []
    for beta in betas:
        t = beta * t_hat
        targets.append((float(beta), float(min(t, 1.0)), "clipped to t=1" if t > 1 else ""))
    if targets:
        ts = (0.0,) + tuple(sorted({t for _, t, _ in targets}))
        recs, rej = collect(params, ts, workers=workers, truncated=False)
        report.rejected = max(rej0, rej)
        D = _stack(recs, "chem_distance")
        A = _stack(recs, "chem_all")
        O = _stack(recs, "chem_overlap")
        x = D[:, 0] - D[:, 0].mean()
        for beta, t, note in targets:
            j = ts.index(t)
            u = x * (D[:, j] - D[:, j].mean())
            c, cse = ratio_se(u, x * x) if var > 0 else (float("nan"), float("nan"))
            f, fse = ratio_se(O[:, j], A[:, 0])
            report.rows.append(RegimeRow(beta, t, c, cse, f, fse, note))
    return report


# --- scaling tables -------------------------------------------------------------------

@dataclass
class ScalingRow:
    n: int
    mean: float
    se: float
    per_n: float
    per_n_se: float
    samples: int
    rejected: int
    note: str = ""


def _params_for(params: SimulationParams, n: int) -> SimulationParams:
    return params.replace(n=n, side=None, M=None, margin=None)


def time_constant(params: SimulationParams, ns, workers: int = 1) -> list[ScalingRow]:
    """Mean D̃(0, n·x)/n per n, with the relative change to the previous n in ``note``."""
    rows = []
    prev = None
    for n in ns:
        p = _params_for(params, n)
        recs, rej = collect(p, (0.0,), workers=workers, truncated=False)
        D = _stack(recs, "chem_distance")[:, 0]
        m, s = float(D.mean()), batch_se(D)
        row = ScalingRow(n, m, s, m / n, s / n, len(recs), rej)
        if prev is not None:
            row.note = f"relative change {abs(row.per_n - prev) / prev:.4f}" if prev else ""
        prev = row.per_n
        rows.append(row)
    return rows


def variance_scaling(params: SimulationParams, ns, workers: int = 1) -> list[ScalingRow]:
    """Var(D̃(0, n·x)) and Var/n per n."""
    rows = []
    for n in ns:
        p = _params_for(params, n)
        recs, rej = collect(p, (0.0,), workers=workers, truncated=False)
        D = _stack(recs, "chem_distance")[:, 0]
        v, s = batch_variance(D)
        rows.append(ScalingRow(n, v, s, v / n, s / n, len(recs), rej))
    if len(rows) >= 2:
        a, b = rows[0], rows[-1]
        gap = a.per_n - b.per_n
        err = math.hypot(a.per_n_se, b.per_n_se)
        rows[-1].note = f"Var/n change from n={a.n}: {-gap:+.4f} (se {err:.4f})"
    return rows


@dataclass
class IntersectionReport:
    rows: list
    ratio_spread: float          # max/min of E|π̃|/n across n
    floor_n: int
    floor_overlap: float         # E|π̃ ∩ π̃^1| at the smallest n
    floor_se: float


def intersection_lower_bound(params: SimulationParams, ns, workers: int = 1) -> IntersectionReport:
    """E|π̃|/n per n and the t = 1 overlap floor at the smallest n."""
    rows = []
    floor = (0.0, float("nan"))
    for k, n in enumerate(ns):
        p = _params_for(params, n)
        ts = (0.0, 1.0) if k == 0 else (0.0,)
        recs, rej = collect(p, ts, workers=workers, truncated=False)
        A = _stack(recs, "chem_all")[:, 0]
        m, s = float(A.mean()), batch_se(A)
        rows.append(ScalingRow(n, m, s, m / n, s / n, len(recs), rej))
        if k == 0:
            O = _stack(recs, "chem_overlap")[:, 1]
            floor = (float(O.mean()), batch_se(O))
    ratios = [r.per_n for r in rows]
    spread = max(ratios) / min(ratios) if min(ratios) > 0 else float("inf")
    return IntersectionReport(rows, spread, int(ns[0]), floor[0], floor[1])


# --- radius, bypass and coincidence surveys -------------------------------------------

def _radius_worker(args):
    from .radius import interior_edges, sample_radii

    pdict, indices, t, per_sample, reach = args
    params = SimulationParams(**_params_args(pdict))
    lat = build_lattice(params)
    pool = interior_edges(lat, reach)
    out = []
    for i in indices:
        env = sample_environment(lat, params, i)
        rng = rng_stream(params.seed, "radius-edges", i)
        edges = np.sort(rng.choice(pool, size=min(per_sample, len(pool)), replace=False))
        r, scanned = sample_radii(env, edges, t, params.C_star)
        out.append((i, edges, r, scanned))
    return out


def radius_survey(params: SimulationParams, t: float, per_sample: int, reach: int,
                  workers: int = 1, min_count: int = 30):
    """r_e for ``per_sample`` random edges near the origin in each sample,
    and the survival table built from them."""
    from .radius import tail_table

    tasks = [(params.to_dict(), c, float(t), per_sample, reach)
             for c in _chunks(0, params.samples)]
    rows = [row for chunk in run_chunks(_radius_worker, tasks, workers) for row in chunk]
    r = np.concatenate([x[2] for x in rows])
    scanned = np.concatenate([x[3] for x in rows])
    return rows, tail_table(r, scanned, min_count)


def _locality_worker(args):
    from .radius import interior_edges, locality_check, perturb_outside

    pdict, indices, t, ells, reach = args
    params = SimulationParams(**_params_args(pdict))
    lat = build_lattice(params)
    pool = interior_edges(lat, reach)
    out = []
    for i in indices:
        rng = rng_stream(params.seed, "locality", i)
        env = sample_environment(lat, params, i)
        e = int(rng.choice(pool))
        ell = int(ells[i % len(ells)])
        other = perturb_outside(env, e, params.C_star * ell, rng)
        out.append((i, e, ell, bool(locality_check(env, other, e, t, params.C_star, ell))))
    return out


def locality_survey(params: SimulationParams, t: float, ells, trials: int, reach: int,
                    workers: int = 1) -> list[tuple]:
    """``(trial, edge, ell, agree)``: is {r_e = ell} unchanged when everything
    outside Λ_{C*·ell}(e) is resampled?"""
    tasks = [(params.to_dict(), c, float(t), tuple(ells), reach) for c in _chunks(0, trials)]
    return [row for chunk in run_chunks(_locality_worker, tasks, workers) for row in chunk]


def _bypass_worker(args):
    from .radius import verify_bypass

    pdict, indices, t = args
    params = SimulationParams(**_params_args(pdict))
    lat = build_lattice(params)
    z0 = np.zeros(params.d, dtype=np.int64)
    z1 = np.asarray(params.target, dtype=np.int64)
    out = []
    for i in indices:
        env = sample_environment(lat, params, i)
        view = env.view(t, CHEMICAL)
        try:
            a, b = regularized_endpoints(view, z0, z1, label_clusters(view))
        except NoGiantCluster:
            out.append((i, None))
            continue
        summary = geodesic_summary(env.view(t, TRUNCATED), a, b)
        out.append((i, verify_bypass(env, t, summary, params.C_star)))
    return out


def bypass_survey(params: SimulationParams, t: float, workers: int = 1) -> list[tuple]:
    """``(sample, BypassReport or None)`` for every sample."""
    tasks = [(params.to_dict(), c, float(t)) for c in _chunks(0, params.samples)]
    return [row for chunk in run_chunks(_bypass_worker, tasks, workers) for row in chunk]


def coincidence_rate(params: SimulationParams, ts, workers: int = 1) -> EstimateSeries:
    """Fraction of samples whose chemical and truncated geodesic sets agree, per t."""
    recs, rej = collect(params, ts, workers=workers, truncated=True)
    return _mean_series("coincidence_rate", tuple(float(t) for t in ts),
                        _stack(recs, "coincide"), rej)


__all__ = [
    "MAX_REJECTION", "MIN_BATCHES", "EstimationError", "SampleRecord", "measure_sample",
    "collect", "EstimateSeries", "series_from_records", "sweep", "OverlapIntegral",
    "overlap_integral", "RegimeRow", "RegimeReport", "regime_sweep", "ScalingRow",
    "time_constant", "variance_scaling", "IntersectionReport", "intersection_lower_bound",
    "run_chunks", "radius_survey", "locality_survey", "bypass_survey", "coincidence_rate",
]
