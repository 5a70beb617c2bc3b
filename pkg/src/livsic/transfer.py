"""Transfer functions ``t`` with ``a(x) = t(sigma x) t(x)^-1``.

:func:`solve` runs the recurrence ``t(sigma^k x0) = a(k, x0)`` along a dense
orbit with ``t(x0) = e``.  Off the orbit the table answers with the value at
the nearest orbit point, together with a Hölder error bound.  Whether the
table is a genuine solution is decided by :func:`consistency_check` (near
returns of the orbit must carry nearly equal values) and by
:func:`verify_coboundary` (the equation itself at random points).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.spatial import cKDTree

from . import kernels
from .cocycle import Cocycle, HolderFit, fit_holder, holder_estimate
from .dynamics import ShiftOfFiniteType, ToralAutomorphism, point_from_json
from .jsonio import plain
from .ring import Element, MatrixRing, SingularError, group_dist, inverses, norms

ROUNDOFF = 1e-12


class CoverageError(LookupError):
    """The query point is too far from the tabulated orbit."""


class NoPairsError(RuntimeError):
    """No near-return pairs were found on the tabulated orbit."""


def _safe_group_dists(f: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Batched group distance; non-finite or singular entries give ``inf``."""
    out = np.full(len(f), np.inf)
    with np.errstate(all="ignore"):
        ok = np.isfinite(f).all(axis=(1, 2)) & np.isfinite(h).all(axis=(1, 2))
        if not ok.any():
            return out
        fo, ho = f[ok], h[ok]
        diff = norms(fo - ho)
        try:
            inv = norms(inverses(fo) - inverses(ho))
        except SingularError:
            inv = np.array([_one_inverse_gap(a, b) for a, b in zip(fo, ho)])
        out[ok] = np.maximum(diff, inv)
    return out


def _one_inverse_gap(a, b):
    try:
        return float(norms(inverses(a[None]) - inverses(b[None]))[0])
    except SingularError:
        return np.inf


class _SymbolIndex:
    """Central-window index over orbit points ``sigma^k x0``, ``0 <= k <= L``."""

    def __init__(self, system: ShiftOfFiniteType, x0, length: int, depth: int):
        k = system.alphabet
        widest = int(62 // math.log2(max(k, 2)))  # keys must fit in int64
        self.max_depth = max(0, min(depth, (widest - 1) // 2))
        self.system = system
        self.x0 = x0
        self.length = length
        pad = self.pad = self.max_depth + 64
        self.syms = x0.symbols(-pad, length + pad + 1)
        self.k = k
        self.levels = []
        for r in range(self.max_depth + 1):
            keys = self._keys(self.syms[pad - r: len(self.syms) - pad + r], r)
            order = np.argsort(keys, kind="stable")
            sk = keys[order]
            starts = np.flatnonzero(np.r_[True, sk[1:] != sk[:-1]])
            first = {int(sk[s]): int(order[s]) for s in starts}
            self.levels.append((keys, order, sk, starts, first))

    def _keys(self, syms, r):
        width = 2 * r + 1
        weights = self.k ** np.arange(width - 1, -1, -1, dtype=np.int64)
        return sliding_window_view(np.asarray(syms, dtype=np.int64), width) @ weights

    def query(self, x) -> int:
        """Index of the nearest orbit point; ties go to the smaller index.

        Points agreeing with ``x`` beyond the cached symbols count as tied.
        """
        syms = x.symbols(-self.max_depth, self.max_depth + 1)
        hit = None
        for r in range(self.max_depth + 1):
            key = int(self._keys(syms[self.max_depth - r: self.max_depth + r + 1], r)[0])
            if key not in self.levels[r][4]:
                break
            hit = (r, key)
        if hit is None:
            return 0
        r, key = hit
        if r < self.max_depth:
            # every member sits at distance exactly 2^-(r+1)
            return self.levels[r][4][key]
        _, order, sk, _, _ = self.levels[r]
        group = np.sort(order[np.searchsorted(sk, key, "left"): np.searchsorted(sk, key, "right")])
        reach = self.pad
        wide = x.symbols(-reach, reach + 1)
        windows = sliding_window_view(self.syms, 2 * reach + 1)[group]
        mismatch = windows != wide
        offset = np.abs(np.arange(2 * reach + 1) - reach)
        agree = np.where(mismatch, offset, reach + 1).min(axis=1)
        return int(group[np.argmax(agree)])

    def distance(self, k: int, m: int) -> float:
        """``dist(sigma^k x0, sigma^m x0)`` from the cached symbols when they suffice."""
        if k == m:
            return 0.0
        reach = self.pad + min(k, m, self.length - max(k, m))
        a = self.syms[self.pad + k - reach: self.pad + k + reach + 1]
        b = self.syms[self.pad + m - reach: self.pad + m + reach + 1]
        bad = np.flatnonzero(a != b)
        if bad.size == 0:
            return self.system.metric(self.system.apply(self.x0, k), self.system.apply(self.x0, m))
        return math.ldexp(1.0, -int(np.abs(bad - reach).min()))

    def group_of(self, r: int, k: int) -> np.ndarray:
        keys, order, sk, starts, _ = self.levels[r]
        key = keys[k]
        lo = np.searchsorted(sk, key, "left")
        hi = np.searchsorted(sk, key, "right")
        return order[lo:hi]

    def consecutive_pairs(self, r: int) -> np.ndarray:
        """Pairs ``(k, m)``, ``k < m``, adjacent within each depth-``r`` group."""
        _, order, sk, _, _ = self.levels[r]
        same = sk[1:] == sk[:-1]
        a, b = order[:-1][same], order[1:][same]
        return np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1)


class _TorusIndex:
    def __init__(self, system: ToralAutomorphism, x0, length: int):
        self.coords = system.orbit_coords(x0, 0, length + 1) % 1.0
        self.tree = cKDTree(self.coords, boxsize=1.0)

    def query(self, x) -> int:
        dist, idx = self.tree.query(np.array(x.coords) % 1.0, k=4, p=np.inf)
        tied = idx[dist <= dist[0] * (1 + 1e-12)]
        return int(tied.min())

    def nearest_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        dist, idx = self.tree.query(self.coords, k=2, p=np.inf)
        k = np.arange(len(self.coords))
        pairs = np.stack([np.minimum(k, idx[:, 1]), np.maximum(k, idx[:, 1])], axis=1)
        pairs, keep = np.unique(pairs, axis=0, return_index=True)
        return pairs, dist[keep, 1]


@dataclass
class TransferTable:
    """Values ``t_k = a(k, x0)`` at the orbit points ``sigma^k x0``."""

    system: object
    x0: object
    values: np.ndarray
    coverage_radius: float
    alpha: float
    holder: HolderFit | None = None
    index: object = field(default=None, repr=False)

    @property
    def length(self) -> int:
        return len(self.values) - 1

    @property
    def ring_dim(self) -> int:
        return self.values.shape[-1]

    def point(self, k: int):
        return self.system.apply(self.x0, k)

    def orbit_distance(self, k: int, m: int) -> float:
        if isinstance(self.index, _SymbolIndex):
            return self.index.distance(k, m)
        delta = np.abs(self.index.coords[k] - self.index.coords[m])
        return float(np.minimum(delta, 1.0 - delta).max())

    def build_index(self, extra_depth: int = 8):
        if isinstance(self.system, ShiftOfFiniteType):
            depth = self.system.coverage_depth(self.x0, self.length) if self.coverage_radius < 1 else 0
            self.index = _SymbolIndex(self.system, self.x0, self.length, depth + extra_depth)
        else:
            self.index = _TorusIndex(self.system, self.x0, self.length)
        return self

    def nearest(self, x) -> tuple[int, float]:
        k = self.index.query(x)
        return k, self.system.metric(x, self.point(k))

    def error_bound(self, distance: float) -> float:
        if self.holder is None:
            return math.inf
        return self.holder.H * distance ** self.alpha

    def evaluate(self, x, ring=None) -> tuple[Element, float]:
        """Value at the nearest orbit point and the Hölder error bound."""
        k, d = self.nearest(x)
        if d > 2.0 * self.coverage_radius:
            raise CoverageError(f"nearest orbit point at distance {d:g} > 2 * coverage {self.coverage_radius:g}")
        ring = ring or MatrixRing(self.ring_dim)
        return Element(ring, self.values[k]), self.error_bound(d)

    def fit_holder(self, pairs: int = 2000, rng=None) -> HolderFit:
        rng = np.random.default_rng(0) if rng is None else rng
        dists, gaps = self.sample_pairs(pairs, rng)
        with np.errstate(all="ignore"):
            scale = float(np.nanmax(np.where(np.isfinite(self.values).all(axis=(1, 2)),
                                             norms(self.values), 0.0)))
        self.holder = fit_holder(dists, gaps, self.alpha, max(scale, 1.0))
        return self.holder

    def sample_pairs(self, count: int, rng) -> tuple[np.ndarray, np.ndarray]:
        """Pairs of table entries spread over distance scales."""
        ks, ms, dists = [], [], []
        n = self.length + 1
        if isinstance(self.index, _SymbolIndex):
            depth = self.index.max_depth
            tries = 0
            while len(ks) < count and tries < 20 * count:
                tries += 1
                k = int(rng.integers(n))
                r = int(rng.integers(-1, depth + 1))
                group = np.arange(n) if r < 0 else self.index.group_of(r, k)
                if len(group) < 2:
                    continue
                m = int(group[rng.integers(len(group))])
                if m == k:
                    continue
                ks.append(k)
                ms.append(m)
            dists = [self.index.distance(k, m) for k, m in zip(ks, ms)]
        else:
            coords = self.index.coords
            for _ in range(count):
                k = int(rng.integers(n))
                rank = int(min(n - 1, 2 ** rng.integers(0, 12)))
                _, idx = self.index.tree.query(coords[k], k=rank + 1, p=np.inf)
                m = int(np.atleast_1d(idx)[-1])
                if m == k:
                    continue
                ks.append(k)
                ms.append(m)
            delta = np.abs(coords[ks] - coords[ms])
            dists = np.minimum(delta, 1.0 - delta).max(axis=1)
        ks, ms = np.asarray(ks), np.asarray(ms)
        return np.asarray(dists, dtype=float), _safe_group_dists(self.values[ks], self.values[ms])

    # -- serialisation -----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "system": self.system.to_json(),
            "x0": self.x0.to_json(),
            "length": self.length,
            "coverage_radius": self.coverage_radius,
            "alpha": self.alpha,
            "holder": None if self.holder is None else self.holder.to_json(),
            "entries": [{"k": k, "value": v.tolist()} for k, v in enumerate(self.values)],
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(plain(self.to_json()), fh, allow_nan=False)

    def write_csv(self, path):
        with np.errstate(all="ignore"):
            logs = np.log(norms(self.values))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "log_norm_t"])
            for k, v in enumerate(logs):
                w.writerow([k, repr(float(v))])

    @classmethod
    def from_json(cls, data: dict, system) -> "TransferTable":
        values = np.array([e["value"] for e in sorted(data["entries"], key=lambda e: e["k"])], dtype=float)
        holder = None
        if data.get("holder"):
            h = data["holder"]
            holder = HolderFit(float(h["alpha"]), float(h["H"]), float(h["alpha_fit"]), h["pairs"], h["levels"])
        table = cls(system, point_from_json(data["x0"]), values, float(data["coverage_radius"]),
                    float(data["alpha"]), holder)
        return table.build_index()

    @classmethod
    def load(cls, path, system) -> "TransferTable":
        with open(path) as fh:
            return cls.from_json(json.load(fh), system)


class ExactTransfer:
    """A transfer function known in closed form, e.g. a synthetic ``t*``."""

    def __init__(self, generator, right_factor: Element | None = None):
        self.generator = generator
        self.system = generator.system
        self.right_factor = right_factor

    def evaluate(self, x, ring=None) -> tuple[Element, float]:
        v = self.generator(x)
        if self.right_factor is not None:
            v = v * self.right_factor
        return v, 0.0


def solve(cocycle: Cocycle, orbit_length: int, x0=None, coverage: float | None = None,
          holder_pairs: int = 2000, rng=None) -> TransferTable:
    """Tabulate ``t_k = a(k, x0)`` for ``k = 0..orbit_length`` (``t_0 = e``).

    Without ``x0`` the system's dense orbit is used.  ``coverage`` is measured
    when not supplied.
    """
    system = cocycle.system
    if x0 is None:
        x0, coverage = system.dense_orbit(orbit_length)
    elif coverage is None:
        coverage = system.coverage_radius(x0, orbit_length)
    with np.errstate(all="ignore"):
        values = kernels.chain_prefix(cocycle.generator.values(x0, 0, orbit_length))
    table = TransferTable(system, x0, values, float(coverage), cocycle.generator.alpha)
    table.build_index()
    table.fit_holder(holder_pairs, rng)
    return table


# --------------------------------------------------------------------------
# checks

@dataclass
class ConsistencyReport:
    delta: float
    pairs: int
    passed: bool
    worst: dict
    inputs: dict
    violations: int

    def to_json(self):
        return {"delta": self.delta, "pairs": self.pairs, "passed": self.passed,
                "violations": self.violations, "worst_pair": self.worst, "bound_inputs": self.inputs}


def growth_constant(cocycle: Cocycle, table: TransferTable, horizon: int = 60, starts: int = 64) -> float:
    """``max(1, |a(j, y)|, |a(j, y)^-1|)`` over ``j <= horizon`` and orbit points ``y``."""
    gen = cocycle.generator
    horizon = min(horizon, table.length)
    idx = np.linspace(0, max(0, table.length - horizon), starts).astype(int)
    vals = np.stack([gen.values(table.x0, int(s), horizon) for s in np.unique(idx)])
    with np.errstate(all="ignore"):
        fwd = kernels.chain_log_norms(vals)
        try:
            inv = kernels.chain_log_norms(inverses(vals, cocycle.ring), left=False)
        except SingularError:
            return math.inf
    top = float(max(fwd.max(), inv.max()))
    return math.exp(min(max(0.0, top), 700.0))


def _sum_factor(n: np.ndarray, rate: float) -> np.ndarray:
    """``sum_{i<n} exp(-rate * min(i, n - i))`` per entry of ``n``."""
    out = np.empty(len(n))
    for v in np.unique(n):
        i = np.arange(int(v))
        out[n == v] = np.exp(-rate * np.minimum(i, v - i)).sum()
    return out


def consistency_check(table: TransferTable, cocycle: Cocycle, delta: float,
                      holder_constant: float | None = None, horizon: int = 60,
                      holder_pairs: int = 1000, rng=None) -> ConsistencyReport:
    """Compare ``t_m t_k^-1 = a(m - k, sigma^k x0)`` with ``e`` at near returns.

    For a near return ``d = dist(sigma^k x0, sigma^m x0) < delta`` the closing
    property gives an ``(m-k)``-periodic point ``2 C d``-shadowing the segment.
    If the periodic products are trivial, the telescoping sum bounds the
    distance from ``e`` by ``G^3 H (2C)^alpha S d^alpha`` with ``H`` the
    generator's Hölder constant, ``G`` the growth constant on short segments
    and ``S = sum_i exp(-alpha lam min(i, n - i))``.
    """
    system, gen = table.system, cocycle.generator
    alpha = gen.alpha
    if holder_constant is None:
        holder_constant = gen.holder_constant(alpha)
    if holder_constant is None:
        holder_constant = 1.5 * holder_estimate(gen, holder_pairs, rng).H
    radius = min(delta, system.delta0)
    if isinstance(table.index, _SymbolIndex):
        r = int(math.floor(math.log2(1.0 / radius))) if radius < 1 else 0
        if 2.0 ** -(r + 1) >= radius:
            r += 1
        if r > table.index.max_depth:
            raise NoPairsError(f"delta {delta:g} needs index depth {r} > {table.index.max_depth}")
        pairs = table.index.consecutive_pairs(r)
    else:
        pairs, _ = table.index.nearest_pairs()
    dists = np.array([table.orbit_distance(int(k), int(m)) for k, m in pairs])
    keep = (dists < radius) & (pairs[:, 0] != pairs[:, 1])
    pairs, dists = pairs[keep], dists[keep]
    if len(pairs) == 0:
        raise NoPairsError(f"no near returns within {radius:g} on an orbit of length {table.length}")
    with np.errstate(all="ignore"):
        tk, tm = table.values[pairs[:, 0]], table.values[pairs[:, 1]]
        ok = np.isfinite(tk).all(axis=(1, 2)) & np.isfinite(tm).all(axis=(1, 2))
        prods = np.full_like(tk, np.nan)
        if ok.any():
            try:
                prods[ok] = tm[ok] @ inverses(tk[ok], cocycle.ring)
            except SingularError:
                ok[:] = False
        eye = np.broadcast_to(np.eye(table.ring_dim), prods.shape)
        gaps = _safe_group_dists(prods, eye)
    G = growth_constant(cocycle, table, horizon)
    n = pairs[:, 1] - pairs[:, 0]
    lam = system.lam
    S = _sum_factor(n, alpha * lam)
    prefactor = G ** 3 * holder_constant * (2.0 * system.C) ** alpha
    bounds = prefactor * S * dists ** alpha
    slack = ROUNDOFF * np.maximum(1.0, np.where(ok, norms(np.where(np.isfinite(prods), prods, 0.0)), 1.0))
    excess = gaps - bounds - slack
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = gaps / (bounds + slack)
    ratio = np.where(np.isnan(ratio), np.inf, ratio)
    finite = np.isfinite(gaps)
    # report a pair with a finite gap when one also breaks the bound
    pool = finite & (excess > 0) if (finite & (excess > 0)).any() else np.ones(len(gaps), bool)
    w = int(np.flatnonzero(pool)[np.argmax(ratio[pool])])
    worst = {"k": int(pairs[w, 0]), "m": int(pairs[w, 1]), "distance": float(dists[w]),
             "gap": float(gaps[w]), "bound": float(bounds[w]), "ratio": float(ratio[w])}
    inputs = {"holder_constant": holder_constant, "alpha": alpha, "growth_constant": G,
              "C": system.C, "lambda": lam, "radius": radius}
    viol = int((excess > 0).sum())
    return ConsistencyReport(delta, int(len(pairs)), viol == 0, worst, inputs, viol)


@dataclass
class CoboundaryReport:
    max_residual: float
    mean_residual: float
    tol: float
    passed: bool
    samples: int
    uncovered: int
    inputs: dict
    consistency: ConsistencyReport | None = None

    def to_json(self):
        out = {"max_residual": self.max_residual, "mean_residual": self.mean_residual, "tol": self.tol,
               "passed": self.passed, "samples": self.samples, "uncovered": self.uncovered,
               "tolerance_inputs": self.inputs}
        if self.consistency is not None:
            out["consistency"] = self.consistency.to_json()
        return out


def default_tolerance(table: TransferTable) -> float:
    """``3 H_t coverage^alpha + 10 * roundoff``."""
    H = table.holder.H if table.holder is not None else math.inf
    return 3.0 * H * table.coverage_radius ** table.alpha + 10 * ROUNDOFF


def verify_coboundary(table: TransferTable, cocycle: Cocycle, samples: int = 500,
                      tol: float | None = None, rng=None,
                      consistency: ConsistencyReport | None = None) -> CoboundaryReport:
    """Residual ``group_dist(a(x), t(sigma x) t(x)^-1)`` at random points."""
    rng = np.random.default_rng(1) if rng is None else rng
    system, ring = table.system, cocycle.ring
    tol = default_tolerance(table) if tol is None else tol
    residuals, uncovered = [], 0
    for _ in range(samples):
        x = system.random_point(rng)
        try:
            tx, _ = table.evaluate(x, ring)
            tsx, _ = table.evaluate(system.apply(x, 1), ring)
        except CoverageError:
            uncovered += 1
            continue
        try:
            residuals.append(group_dist(cocycle.generator(x), tsx * tx.inverse()))
        except (SingularError, FloatingPointError):
            residuals.append(math.inf)
    res = np.array(residuals) if residuals else np.array([math.inf])
    with np.errstate(invalid="ignore", over="ignore"):
        res = np.where(np.isnan(res), np.inf, res)
        mean_res = float(res.mean())
    max_res = float(res.max())
    passed = (math.isfinite(tol) and max_res <= tol and uncovered <= 0.1 * samples
              and (consistency is None or consistency.passed))
    inputs = {"H_t": table.holder.H if table.holder else None, "coverage_radius": table.coverage_radius,
              "alpha": table.alpha, "roundoff": ROUNDOFF, "formula": "3*H_t*coverage^alpha + 10*roundoff"}
    return CoboundaryReport(max_res, mean_res, float(tol), bool(passed), samples, uncovered,
                            inputs, consistency)


@dataclass
class ConstancyReport:
    spread: float
    tol: float
    passed: bool
    samples: int
    constant: list

    def to_json(self):
        return {"spread": self.spread, "tol": self.tol, "passed": self.passed,
                "samples": self.samples, "constant": self.constant}


def compare_transfers(t1, t2, ring, samples: int = 200, rng=None) -> ConstancyReport:
    """Two solutions differ by a right constant: check ``t1(x)^-1 t2(x)`` is constant."""
    rng = np.random.default_rng(2) if rng is None else rng
    system = t1.system
    cs, scale, err = [], 0.0, 0.0
    for _ in range(samples):
        x = system.random_point(rng)
        v1, e1 = t1.evaluate(x, ring)
        v2, e2 = t2.evaluate(x, ring)
        c = v1.inverse() * v2
        cs.append(c.value)
        scale = max(scale, v1.inverse().norm() * max(1.0, c.norm()),
                    v2.inverse().norm() * max(1.0, c.inverse().norm()))
        err = max(err, e1 + e2)
    cs = np.array(cs)
    i, j = np.triu_indices(len(cs), 1)
    spread = float(_safe_group_dists(cs[i], cs[j]).max()) if len(i) else 0.0
    tol = 2.0 * scale * err + 1e-9
    return ConstancyReport(spread, tol, bool(spread <= tol), samples, cs.mean(axis=0).tolist())
