"""Exact enumeration checks of the dynamical covariance identities.

Functions f: {ℓ, L}^E → Q are tabulated on bit masks (bit e set ⇔ X_e = L)
and every quantity is an exact rational polynomial in the noise level.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from .lattice import rng_stream

T = sympy.Symbol("t")
P = sympy.Symbol("p")
MAX_EDGES = 12


class OracleError(ValueError):
    pass


class IdentityFailure(AssertionError):
    """An asserted exact identity does not hold."""


@dataclass(frozen=True)
class OracleInstance:
    n: int
    p: Fraction
    ell: int
    L: int
    table: tuple            # 2**n rationals, indexed by bit mask
    label: str = ""

    def __post_init__(self):
        if not 1 <= self.n <= MAX_EDGES:
            raise OracleError(f"n must be in 1..{MAX_EDGES}")
        if not 0 < self.p < 1:
            raise OracleError("p must lie strictly between 0 and 1")
        if not self.ell <= self.L:
            raise OracleError("need ell <= L")
        if len(self.table) != 2**self.n:
            raise OracleError(f"table needs {2**self.n} entries, got {len(self.table)}")
        object.__setattr__(self, "p", Fraction(self.p))
        object.__setattr__(self, "table", tuple(Fraction(v) for v in self.table))

    def value(self, mask: int) -> Fraction:
        return self.table[mask]

    def coords(self, mask: int) -> tuple[int, ...]:
        return tuple(self.L if mask >> e & 1 else self.ell for e in range(self.n))

    def prob(self, mask: int, edges=None) -> Fraction:
        """P(X restricted to ``edges`` equals ``mask`` there)."""
        edges = range(self.n) if edges is None else edges
        out = Fraction(1)
        for e in edges:
            out *= (1 - self.p) if mask >> e & 1 else self.p
        return out


def random_instance(n: int, p, ell: int, L: int, seed: int, label: str = "") -> OracleInstance:
    rng = rng_stream(seed, "oracle", n)
    num = rng.integers(-20, 21, size=2**n)
    den = rng.integers(1, 6, size=2**n)
    return OracleInstance(n, Fraction(p), ell, L,
                          tuple(Fraction(int(a), int(b)) for a, b in zip(num, den)), label)


def function_instance(n: int, p, ell: int, L: int, fn, label: str = "") -> OracleInstance:
    """Tabulate ``fn(coords)`` where coords is the tuple of X_e values."""
    tmp = [Fraction(fn(tuple(L if m >> e & 1 else ell for e in range(n)))) for m in range(2**n)]
    return OracleInstance(n, Fraction(p), ell, L, tuple(tmp), label)


def lift(inst: OracleInstance, n_new: int, positions) -> OracleInstance:
    """The same function viewed on a larger index set; coordinate i of
    ``inst`` sits at ``positions[i]`` and the remaining ones are ignored."""
    table = []
    for m in range(2**n_new):
        sub = 0
        for i, pos in enumerate(positions):
            if m >> pos & 1:
                sub |= 1 << i
        table.append(inst.table[sub])
    return OracleInstance(n_new, inst.p, inst.ell, inst.L, tuple(table), inst.label)


# --- polynomials --------------------------------------------------------------------

def _poly(expr, var=T) -> sympy.Poly:
    return sympy.Poly(expr, var, domain=sympy.QQ)


def _q(x: Fraction):
    return sympy.Rational(x.numerator, x.denominator)


def _mix_poly(by_k: dict, n: int, var=T) -> sympy.Poly:
    """Σ_k A_k var^k (1 - var)^(n-k)."""
    expr = sum(_q(a) * var**k * (1 - var) ** (n - k) for k, a in by_k.items() if a != 0)
    return _poly(expr if expr != 0 else sympy.Integer(0), var)


@lru_cache(maxsize=256)
def _noise_pairs(inst: OracleInstance) -> tuple:
    """``(k, x, y, weight)`` aggregated over X = x, a resample set S with
    |S| = k and the resampled values, where y is X(t) for that outcome."""
    n = inst.n
    acc: dict[tuple, Fraction] = {}
    for x in range(2**n):
        px = inst.prob(x)
        for k in range(n + 1):
            for S in itertools.combinations(range(n), k):
                for vals in range(2**k):
                    y = x
                    w = px
                    for i, e in enumerate(S):
                        bit = vals >> i & 1
                        y = (y | (1 << e)) if bit else (y & ~(1 << e))
                        w *= (1 - inst.p) if bit else inst.p
                    acc[(k, x, y)] = acc.get((k, x, y), Fraction(0)) + w
    return tuple((k, x, y, w) for (k, x, y), w in acc.items())


def mean(inst: OracleInstance) -> Fraction:
    return sum((inst.prob(m) * inst.value(m) for m in range(2**inst.n)), Fraction(0))


def covariance_poly(inst: OracleInstance) -> sympy.Poly:
    """Cov(f(X), f(X(t))) as an exact polynomial in t, by direct enumeration."""
    by_k: dict[int, Fraction] = {}
    for k, x, y, w in _noise_pairs(inst):
        by_k[k] = by_k.get(k, Fraction(0)) + w * inst.value(x) * inst.value(y)
    m = mean(inst)
    return _mix_poly(by_k, inst.n) - _poly(_q(m * m))


def covariance_fourier(inst: OracleInstance) -> sympy.Poly:
    """Second route: Σ_{S≠∅} c_S² v^{|S|} (1-t)^{|S|} in the p-biased basis
    φ_e = 1{X_e = ℓ} - p, v = p(1-p), c_S = E[f Π φ_e] / v^{|S|}."""
    n, p = inst.n, inst.p
    v = p * (1 - p)
    expr = sympy.Integer(0)
    for k in range(1, n + 1):
        for S in itertools.combinations(range(n), k):
            c = Fraction(0)
            for m in range(2**n):
                phi = Fraction(1)
                for e in S:
                    phi *= (Fraction(0) if m >> e & 1 else Fraction(1)) - p
                c += inst.prob(m) * inst.value(m) * phi
            coef = c * c / v**k
            if coef:
                expr += _q(coef) * (1 - T) ** k
    return _poly(expr)


def _flip(mask: int, e: int, to_L: bool) -> int:
    return (mask | (1 << e)) if to_L else (mask & ~(1 << e))


def grad(inst: OracleInstance, mask: int, e: int, a_is_L: bool, b_is_L: bool) -> Fraction:
    """∇_e^{a,b} f at ``mask``: f(σ_e^a x) - f(σ_e^b x)."""
    return inst.value(_flip(mask, e, a_is_L)) - inst.value(_flip(mask, e, b_is_L))


def influence_poly(inst: OracleInstance, e: int) -> sympy.Poly:
    """E[∇_e^{L,ℓ} f(X) ∇_e^{L,ℓ} f(X(s))] as a polynomial in s (symbol t)."""
    by_k: dict[int, Fraction] = {}
    for k, x, y, w in _noise_pairs(inst):
        val = grad(inst, x, e, True, False) * grad(inst, y, e, True, False)
        if val:
            by_k[k] = by_k.get(k, Fraction(0)) + w * val
    return _mix_poly(by_k, inst.n)


def coinfluence_poly(inst: OracleInstance, e: int, times=None) -> sympy.Poly:
    """E[∇_e^{X_e,X^1_e} f(X) ∇_e^{X_e,X^2_e} f(X(s))] by enumerating X^1_e, X^2_e too.

    ``times`` optionally fixes the noise level of other coordinates (a dict
    edge → Fraction); coordinates not listed use the variable.
    """
    n, p = inst.n, inst.p
    if not times:
        by_k: dict[int, Fraction] = {}
        for k, x, y, w in _noise_pairs(inst):
            xe_L = bool(x >> e & 1)
            for a1 in (False, True):
                g1 = grad(inst, x, e, xe_L, a1)
                if not g1:
                    continue
                for a2 in (False, True):
                    val = g1 * grad(inst, y, e, xe_L, a2)
                    if val:
                        w12 = ((1 - p) if a1 else p) * ((1 - p) if a2 else p)
                        by_k[k] = by_k.get(k, Fraction(0)) + w * w12 * val
        return _mix_poly(by_k, n)
    free = [j for j in range(n) if j not in times]
    out = sympy.Integer(0)
    by_k: dict[tuple, Fraction] = {}
    fixed = [j for j in range(n) if j in times]
    for x in range(2**n):
        px = inst.prob(x)
        for R in itertools.product((0, 1), repeat=n):
            # R[j] = 1: coordinate j resampled
            wr = Fraction(1)
            for j in fixed:
                wr *= times[j] if R[j] else 1 - times[j]
            k = sum(R[j] for j in free)
            res = [j for j in range(n) if R[j]]
            for vals in range(2 ** len(res)):
                y = x
                w = px * wr
                for i, j in enumerate(res):
                    bit = vals >> i & 1
                    y = _flip(y, j, bool(bit))
                    w *= (1 - p) if bit else p
                xe_L = bool(x >> e & 1)
                for a1 in (False, True):
                    for a2 in (False, True):
                        w12 = ((1 - p) if a1 else p) * ((1 - p) if a2 else p)
                        val = (grad(inst, x, e, xe_L, a1) * grad(inst, y, e, xe_L, a2))
                        if val:
                            by_k[k] = by_k.get(k, Fraction(0)) + w * w12 * val
    for k, a in by_k.items():
        out += _q(a) * T**k * (1 - T) ** (len(free) - k)
    return _poly(out)


def _integrate_t_to_1(poly: sympy.Poly) -> sympy.Poly:
    """∫_t^1 poly(s) ds."""
    F = poly.integrate()
    return _poly(F.eval(1) - F.as_expr())


def _assert_equal(lhs: sympy.Poly, rhs: sympy.Poly, what: str, var=T) -> None:
    diff = lhs - rhs
    if not diff.is_zero:
        (deg,), coef = diff.terms()[0]
        a = lhs.coeff_monomial(var**deg)
        b = rhs.coeff_monomial(var**deg)
        raise IdentityFailure(f"{what}: coefficient of {var}^{deg} differs ({a} vs {b})")


@dataclass
class OracleReport:
    instance: str
    passed: bool
    checks: list = field(default_factory=list)
    polynomials: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [f"{self.instance}: {'PASS' if self.passed else 'FAIL'}"]
        out += [f"  {c}" for c in self.checks]
        out += [f"  {k} = {v}" for k, v in self.polynomials.items()]
        return out


def verify_representation(inst: OracleInstance) -> OracleReport:
    """Cov(f(X), f(X(t))) against the integrated co-influences, both forms,
    plus the per-edge identity between the two co-influence forms."""
    cov = covariance_poly(inst)
    v = _q(inst.p * (1 - inst.p))
    total_plain = _poly(0)
    total_raw = _poly(0)
    for e in range(inst.n):
        plain = influence_poly(inst, e)
        raw = coinfluence_poly(inst, e)
        _assert_equal(raw, plain * v, f"edge {e}: co-influence forms")
        total_plain += plain
        total_raw += raw
    _assert_equal(cov, _integrate_t_to_1(total_raw), "covariance vs integrated co-influence")
    _assert_equal(cov, _integrate_t_to_1(total_plain) * v,
                  "covariance vs p(1-p) · integrated influence")
    return OracleReport(inst.label, True,
                        ["per-edge co-influence identity", "covariance representation"],
                        {"cov(t)": str(cov.as_expr())})


def verify_russo(inst: OracleInstance) -> OracleReport:
    """d/dp E[f(X)] = Σ_e E[∇_e^{ℓ,L} f(X)] as polynomials in p."""
    n = inst.n
    Ef = sympy.Integer(0)
    rhs = sympy.Integer(0)
    for m in range(2**n):
        k_L = bin(m).count("1")
        w = P ** (n - k_L) * (1 - P) ** k_L
        Ef += _q(inst.value(m)) * w
        for e in range(n):
            rhs += _q(grad(inst, m, e, False, True)) * w
    lhs = _poly(sympy.diff(Ef, P), P)
    _assert_equal(lhs, _poly(rhs, P), "Russo formula", P)
    return OracleReport(inst.label, True, ["Russo formula"], {"E[f](p)": str(_poly(Ef, P).as_expr())})


def verify_monotonicity(inst: OracleInstance, e: int = 0, times=None) -> OracleReport:
    """φ(t_e) = E[f(X) f(X(t_e, others))]: degree ≤ 1 in t_e with slope equal to
    minus the co-influence at e, and non-positive.  ``times`` fixes the noise
    levels of the other coordinates (default: pseudorandom rationals)."""
    n, p = inst.n, inst.p
    if times is None:
        rng = rng_stream(0, "oracle-times", n, e)
        times = {j: Fraction(int(rng.integers(0, 11)), 10) for j in range(n) if j != e}
    times = {j: Fraction(v) for j, v in times.items() if j != e}
    by_k: dict[int, Fraction] = {}
    for x in range(2**n):
        px = inst.prob(x)
        for R in itertools.product((0, 1), repeat=n):
            wr = Fraction(1)
            for j, tj in times.items():
                wr *= tj if R[j] else 1 - tj
            res = [j for j in range(n) if R[j]]
            for vals in range(2 ** len(res)):
                y = x
                w = px * wr
                for i, j in enumerate(res):
                    bit = vals >> i & 1
                    y = _flip(y, j, bool(bit))
                    w *= (1 - p) if bit else p
                by_k[R[e]] = by_k.get(R[e], Fraction(0)) + w * inst.value(x) * inst.value(y)
    phi = _mix_poly(by_k, 1)
    if phi.degree() > 1:
        raise IdentityFailure("φ has degree above 1")
    slope = phi.coeff_monomial(T)
    co = coinfluence_poly(inst, e, times)
    if co.degree() > 0:
        raise IdentityFailure("co-influence depends on t_e")
    _assert_equal(_poly(slope), -co, "φ' against co-influence")
    if slope > 0:
        raise IdentityFailure(f"φ increases in t_e (slope {slope})")
    return OracleReport(inst.label, True, ["φ linear in t_e", "slope = -co-influence", "slope ≤ 0"],
                        {"phi(t_e)": str(phi.as_expr())})


def check_covariance_shape(inst: OracleInstance, points: int = 101) -> bool:
    """Covariance is ≥ 0 and non-increasing on an exact rational grid of t."""
    cov = covariance_poly(inst)
    vals = [cov.eval(sympy.Rational(i, points - 1)) for i in range(points)]
    return all(v >= 0 for v in vals) and all(b <= a for a, b in zip(vals, vals[1:]))


def verify_countable_limit(inst: OracleInstance, chain) -> OracleReport:
    """Representation is unchanged when f is viewed on larger index sets.

    ``chain`` lists ``(n_new, positions)`` pairs, each mapping the previous
    level's coordinates into the next one.
    """
    base_cov = covariance_poly(inst)
    base_inf = [influence_poly(inst, e) for e in range(inst.n)]
    cur = inst
    origin = list(range(inst.n))
    checks = []
    for n_new, positions in chain:
        nxt = lift(cur, n_new, positions)
        origin = [positions[i] for i in origin]
        _assert_equal(covariance_poly(nxt), base_cov, f"covariance on {n_new} coordinates")
        for e in range(n_new):
            want = base_inf[origin.index(e)] if e in origin else _poly(0)
            _assert_equal(influence_poly(nxt, e), want, f"influence of coordinate {e} on {n_new}")
        checks.append(f"nested level with {n_new} coordinates")
        cur = nxt
    return OracleReport(inst.label, True, checks, {"cov(t)": str(base_cov.as_expr())})


def random_chain(n: int, depth: int, seed: int):
    """Random nesting: each level adds 0 to 2 coordinates at random positions."""
    rng = rng_stream(seed, "oracle-chain", n)
    chain = []
    cur = n
    for _ in range(depth):
        add = int(rng.integers(0, 3))
        new = min(cur + add, MAX_EDGES)
        positions = sorted(rng.choice(new, size=cur, replace=False).tolist())
        chain.append((new, positions))
        cur = new
    return chain


# --- instance files ----------------------------------------------------------------

def load_instances(path) -> list[OracleInstance]:
    """TOML instance file: ``[[instance]]`` tables with n, p (e.g. "3/5"),
    ell, L and either ``seed`` or an explicit ``table`` of rationals."""
    import tomli

    with open(path, "rb") as fh:
        data = tomli.load(fh)
    allowed = {"n", "p", "ell", "L", "seed", "table", "label"}
    out = []
    for i, spec in enumerate(data.get("instance", [])):
        extra = set(spec) - allowed
        if extra:
            raise OracleError(f"instance {i}: unknown keys {sorted(extra)}")
        for key in ("n", "p", "ell", "L"):
            if key not in spec:
                raise OracleError(f"instance {i}: missing key {key!r}")
        label = spec.get("label", f"instance-{i}")
        p = Fraction(str(spec["p"]))
        if "table" in spec:
            out.append(OracleInstance(int(spec["n"]), p, int(spec["ell"]), int(spec["L"]),
                                      tuple(Fraction(str(v)) for v in spec["table"]), label))
        else:
            out.append(random_instance(int(spec["n"]), p, int(spec["ell"]), int(spec["L"]),
                                       int(spec.get("seed", 0)), label))
    if not out:
        raise OracleError("no [[instance]] tables found")
    return out


def default_instances() -> list[OracleInstance]:
    """|E| ∈ {1..4}, p ∈ {1/2, 3/5}, (ℓ, L) = (1, 5), five seeds each."""
    out = []
    for n in (1, 2, 3, 4):
        for p in (Fraction(1, 2), Fraction(3, 5)):
            for s in range(5):
                out.append(random_instance(n, p, 1, 5, s, f"n={n} p={p} seed={s}"))
    return out


def run_all(instances) -> list[OracleReport]:
    """Every check on every instance; a failing identity raises."""
    reports = []
    for inst in instances:
        rep = verify_representation(inst)
        rep.checks += verify_russo(inst).checks
        rep.checks += verify_monotonicity(inst).checks
        if not check_covariance_shape(inst):
            raise IdentityFailure(f"{inst.label}: covariance not non-negative and non-increasing")
        rep.checks.append("covariance ≥ 0 and non-increasing on 101 points")
        reports.append(rep)
    return reports


__all__ = [
    "T", "P", "MAX_EDGES", "OracleError", "IdentityFailure", "OracleInstance", "OracleReport",
    "random_instance", "function_instance", "lift", "mean", "covariance_poly",
    "covariance_fourier", "grad", "influence_poly", "coinfluence_poly", "verify_representation",
    "verify_russo", "verify_monotonicity", "check_covariance_shape", "verify_countable_limit",
    "random_chain", "load_instances", "default_instances", "run_all",
]
