"""Generators ``a: X -> B^x`` and the cocycles they generate.

A generator knows its base system and ring and can return its values along
an orbit segment as a stacked array, which is what the product kernels
consume.  :class:`Cocycle` evaluates ``a(n, x)`` for every sign of ``n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import kernels
from .dynamics import ShiftOfFiniteType, SymbolPoint, ToralAutomorphism, TorusPoint
from .expr import Formula
from .ring import (
    Element,
    MatrixRing,
    SingularError,
    exp_element,
    group_dist,
    inverses,
    norms,
)


class Generator:
    """Base class.  Subclasses implement :meth:`values`."""

    system = None
    ring: MatrixRing
    alpha: float = 1.0

    def values(self, x, start: int, count: int) -> np.ndarray:
        """``a(sigma^(start+i) x)`` for ``i < count``, shape (count, d, d)."""
        raise NotImplementedError

    def __call__(self, x) -> Element:
        return Element(self.ring, self.values(x, 0, 1)[0])

    def holder_constant(self, alpha: float | None = None) -> float | None:
        """Exact Hölder constant when it is computable, else ``None``."""
        return None

    def scaled(self, factor: float) -> "Generator":
        return ScaledGenerator(self, factor)

    def sup_norms(self, points) -> tuple[float, float]:
        """``max |a|`` and ``max |a^-1|`` over ``points``."""
        vals = np.concatenate([self.values(p, 0, 1) for p in points])
        return float(norms(vals).max()), float(norms(inverses(vals, self.ring)).max())

    def stacked_values(self, points, start: int, count: int) -> np.ndarray:
        """Values along the orbit segments of many points: (B, count, d, d)."""
        d = self.ring.dim
        out = np.empty((len(points), count, d, d))
        for i, p in enumerate(points):
            out[i] = self.values(p, start, count)
        return out


class WindowGenerator(Generator):
    """Value depends on the central window ``x_{-r}..x_{r}`` of an SFT point."""

    def __init__(self, system: ShiftOfFiniteType, radius: int, table: dict, ring: MatrixRing,
                 alpha: float = 1.0):
        if not isinstance(system, ShiftOfFiniteType):
            raise TypeError("window generators live on shifts of finite type")
        self.system = system
        self.radius = int(radius)
        self.ring = ring
        self.alpha = float(alpha)
        k, width = system.alphabet, 2 * self.radius + 1
        if k ** width > 1 << 22:
            raise ValueError("window table too large")
        self._weights = k ** np.arange(width - 1, -1, -1, dtype=np.int64)
        self.lookup = np.full((k ** width, ring.dim, ring.dim), np.nan)
        self.words = admissible_words(system, width)
        missing = []
        for word in self.words:
            if word not in table:
                missing.append(word)
                continue
            self.lookup[self._code(word)] = ring.element(table[word]).value
        if missing:
            raise ValueError(f"window table misses {len(missing)} admissible words, e.g. {missing[0]}")
        codes = [self._code(w) for w in self.words]
        inverses(self.lookup[codes], ring)
        self.table = {w: self.lookup[self._code(w)].copy() for w in self.words}

    def _code(self, word) -> int:
        return int(np.dot(np.asarray(word, dtype=np.int64), self._weights))

    def codes(self, x: SymbolPoint, start: int, count: int) -> np.ndarray:
        r = self.radius
        syms = x.symbols(start - r, start + count + r)
        return sliding_window_view(syms, 2 * r + 1) @ self._weights

    def values(self, x, start, count):
        return self.lookup[self.codes(x, start, count)]

    def holder_constant(self, alpha=None):
        """Sup of ``|a(x) - a(y)| / dist(x, y)^alpha`` over all window pairs."""
        alpha = self.alpha if alpha is None else alpha
        r = self.radius
        words = self.words
        vals = np.stack([self.table[w] for w in words])
        arr = np.array(words)
        best = 0.0
        centre = r
        for i in range(len(words)):
            diff = arr != arr[i]
            if not diff.any():
                continue
            idx = np.where(diff.any(axis=1))[0]
            first = np.array([np.abs(np.flatnonzero(diff[j]) - centre).min() for j in idx])
            gaps = norms(vals[idx] - vals[i])
            best = max(best, float((gaps * 2.0 ** (first * alpha)).max()))
        return best

    def combinatorial_bound(self) -> float:
        """``max value gap * 2^radius``, an upper bound for the Lipschitz constant."""
        vals = np.stack([self.table[w] for w in self.words])
        gap = max(float(norms(vals - v).max()) for v in vals)
        return gap * 2.0 ** self.radius

    def scaled(self, factor):
        return WindowGenerator(self.system, self.radius,
                               {w: v * factor for w, v in self.table.items()}, self.ring, self.alpha)

    def to_json(self):
        return {"type": "window", "radius": self.radius,
                "table": {word_key(w, self.system.alphabet): v.tolist() for w, v in self.table.items()}}


class ExprGenerator(Generator):
    """Generator on a toral automorphism given by a :class:`~livsic.expr.Formula`."""

    def __init__(self, system: ToralAutomorphism, formula: str, ring: MatrixRing,
                 constants: dict | None = None, alpha: float = 1.0, check_points: int = 256):
        if not isinstance(system, ToralAutomorphism):
            raise TypeError("expression generators live on toral automorphisms")
        self.system = system
        self.ring = ring
        self.alpha = float(alpha)
        self.formula = Formula(formula, constants, ring.dim)
        self.constants = constants or {}
        g = (np.arange(16) + 0.5) / 16
        grid = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
        probe = np.concatenate([grid, np.random.default_rng(0).random((check_points, 2))])
        inverses(self.formula.evaluate(probe), ring)

    def values(self, x, start, count):
        return self.formula.evaluate(self.system.orbit_coords(x, start, count))

    def evaluate_coords(self, coords):
        return self.formula.evaluate(coords)

    def to_json(self):
        return {"type": "expr", "formula": self.formula.text,
                "constants": {k: np.asarray(v).tolist() for k, v in self.constants.items()}}


class ConstantGenerator(Generator):
    def __init__(self, system, value: Element, alpha: float = 1.0):
        self.system = system
        self.ring = value.ring
        self.alpha = float(alpha)
        self.value = value
        inverses(value.value[None], self.ring)

    def values(self, x, start, count):
        return np.broadcast_to(self.value.value, (count, self.ring.dim, self.ring.dim)).copy()

    def holder_constant(self, alpha=None):
        return 0.0

    def scaled(self, factor):
        return ConstantGenerator(self.system, self.value * factor, self.alpha)

    def to_json(self):
        return {"type": "constant", "value": self.value.to_json()}


class ScaledGenerator(Generator):
    """``factor * base(x)`` for a real ``factor``."""

    def __init__(self, base: Generator, factor: float):
        if factor == 0.0:
            raise SingularError("zero scale factor")
        self.base = base
        self.factor = float(factor)
        self.system = base.system
        self.ring = base.ring
        self.alpha = base.alpha

    def values(self, x, start, count):
        return self.factor * self.base.values(x, start, count)

    def holder_constant(self, alpha=None):
        h = self.base.holder_constant(alpha)
        return None if h is None else abs(self.factor) * h

    def to_json(self):
        return {**self.base.to_json(), "factor": self.factor}


class CoboundaryGenerator(Generator):
    """``a(x) = t(sigma x) t(x)^-1`` for a transfer generator ``t``."""

    def __init__(self, transfer: Generator):
        self.transfer = transfer
        self.system = transfer.system
        self.ring = transfer.ring
        self.alpha = transfer.alpha

    def values(self, x, start, count):
        t = self.transfer.values(x, start, count + 1)
        return t[1:] @ inverses(t[:-1], self.ring)

    def to_json(self):
        return {"type": "coboundary", "transfer": self.transfer.to_json()}


class FunctionGenerator(Generator):
    """Wraps a per-point callable returning something :meth:`MatrixRing.element` accepts."""

    def __init__(self, system, ring: MatrixRing, func, alpha: float = 1.0):
        self.system = system
        self.ring = ring
        self.func = func
        self.alpha = float(alpha)

    def values(self, x, start, count):
        y = self.system.apply(x, start)
        out = np.empty((count, self.ring.dim, self.ring.dim))
        for i in range(count):
            out[i] = self.ring.element(self.func(y)).value
            y = self.system.apply(y, 1)
        return out


def admissible_words(system: ShiftOfFiniteType, length: int) -> list[tuple]:
    words = [(s,) for s in range(system.alphabet)]
    for _ in range(length - 1):
        words = [w + (v,) for w in words for v in range(system.alphabet) if system.adjacency[w[-1], v]]
    return sorted(words)


def word_key(word, alphabet: int) -> str:
    if alphabet <= 10:
        return "".join(str(s) for s in word)
    return ",".join(str(s) for s in word)


def parse_word(key: str, alphabet: int) -> tuple:
    if "," in key or alphabet > 10:
        return tuple(int(s) for s in key.split(","))
    return tuple(int(s) for s in key)


def window_coboundary(transfer: WindowGenerator) -> WindowGenerator:
    """The coboundary of a window transfer map, as a window generator of radius + 1."""
    system, r = transfer.system, transfer.radius
    table = {}
    for u in admissible_words(system, 2 * r + 3):
        here = transfer.table[tuple(u[1:2 * r + 2])]
        there = transfer.table[tuple(u[2:2 * r + 3])]
        table[u] = there @ np.linalg.inv(here)
    return WindowGenerator(system, r + 1, table, transfer.ring, transfer.alpha)


def random_window_table(system: ShiftOfFiniteType, radius: int, ring: MatrixRing,
                        rng: np.random.Generator, scale: float = 0.5, exponentiate: bool = True) -> dict:
    """Random entries of sup norm ``scale``; with ``exponentiate`` each entry is ``exp(m)``."""
    table = {}
    for w in admissible_words(system, 2 * radius + 1):
        m = rng.uniform(-1.0, 1.0, (ring.dim, ring.dim))
        m *= scale / max(norms(m), 1e-300)
        table[w] = exp_element(ring.element(m)).value if exponentiate else m
    return table


# --------------------------------------------------------------------------
# cocycle evaluation

class Cocycle:
    """Evaluates ``a(n, x)`` for a generator.

    Positive ``n`` uses cached dyadic blocks ``a(2^j, y)`` when ``cache`` is
    on; the bracketing then differs from the flat left-to-right product but
    the factor order never does.
    """

    def __init__(self, generator: Generator, cache: bool = True, cache_size: int = 1 << 18):
        self.generator = generator
        self.system = generator.system
        self.ring = generator.ring
        self.use_cache = cache
        self.cache_size = cache_size
        self._blocks: dict = {}

    @property
    def identity(self) -> Element:
        return self.ring.identity

    def __call__(self, n: int, x) -> Element:
        return self.evaluate(n, x)

    def evaluate(self, n: int, x) -> Element:
        n = int(n)
        if n == 0:
            return self.ring.identity
        if n > 0:
            if self.use_cache:
                return Element(self.ring, self._dyadic(n, x))
            vals = self.generator.values(x, 0, n)
            return Element(self.ring, kernels.chain_product(vals))
        vals = inverses(self.generator.values(x, n, -n), self.ring)
        return Element(self.ring, kernels.chain_product(vals[::-1]))

    def evaluate_flat(self, n: int, x) -> Element:
        """Literal product with ring elements, newest factor on the left."""
        result = self.ring.identity
        if n >= 0:
            y = x
            for _ in range(n):
                result = self.generator(y) * result
                y = self.system.apply(y, 1)
            return result
        y = self.system.apply(x, -1)
        for _ in range(-n):
            result = self.generator(y).inverse() * result
            y = self.system.apply(y, -1)
        return result

    def _block(self, j: int, y) -> np.ndarray:
        key = (y, j)
        hit = self._blocks.get(key)
        if hit is not None:
            return hit
        if j == 0:
            val = self.generator.values(y, 0, 1)[0]
        else:
            half = 1 << (j - 1)
            val = self._block(j - 1, self.system.apply(y, half)) @ self._block(j - 1, y)
        if len(self._blocks) >= self.cache_size:
            self._blocks.clear()
        val.setflags(write=False)
        self._blocks[key] = val
        return val

    def _dyadic(self, n: int, x) -> np.ndarray:
        result = np.eye(self.ring.dim)
        y = x
        j = 0
        while n:
            if n & 1:
                result = self._block(j, y) @ result
                y = self.system.apply(y, 1 << j)
            n >>= 1
            j += 1
        return result

    def clear_cache(self):
        self._blocks.clear()

    def identity_residual(self, n: int, k: int, x) -> float:
        """``|a(n, x) - a(n - k, sigma^k x) a(k, x)|``."""
        lhs = self.evaluate(n, x)
        rhs = self.evaluate(n - k, self.system.apply(x, k)) * self.evaluate(k, x)
        return (lhs - rhs).norm()

    def obstruction(self, p, n: int) -> tuple[Element, float]:
        """The product around the periodic orbit of ``p`` and its distance from ``e``."""
        if self.system.apply(p, n) != p:
            raise ValueError(f"point is not {n}-periodic")
        prod = self.evaluate(n, p)
        return prod, group_dist(prod, self.ring.identity)

    def prefix_products(self, x, count: int) -> np.ndarray:
        """``a(k, x)`` for ``k = 0..count``: shape (count + 1, d, d)."""
        return kernels.chain_prefix(self.generator.values(x, 0, count))


@dataclass
class ObstructionScan:
    entries: list  # (period, index, point, deviation)

    @property
    def max_deviation(self) -> float:
        return max((e[3] for e in self.entries), default=0.0)

    def by_period(self) -> dict:
        out: dict = {}
        for period, _, _, dev in self.entries:
            out[period] = max(out.get(period, 0.0), dev)
        return out


def scan_obstructions(cocycle: Cocycle, period_bound: int) -> ObstructionScan:
    """Deviation of ``a(n, p)`` from ``e`` at every ``p`` with ``sigma^n p = p``, ``n <= period_bound``."""
    system, gen, ring = cocycle.system, cocycle.generator, cocycle.ring
    eye = np.eye(ring.dim)
    entries = []
    for n in range(1, period_bound + 1):
        points = system.periodic_points(n)
        prods = kernels.chain_product(gen.stacked_values(points, 0, n))
        dev = np.maximum(norms(prods - eye), norms(inverses(prods, ring) - eye))
        entries.extend((n, i, p, float(d)) for i, (p, d) in enumerate(zip(points, dev)))
    return ObstructionScan(entries)


# --------------------------------------------------------------------------
# Hölder estimation

@dataclass
class HolderFit:
    alpha: float          # declared exponent the constant refers to
    H: float              # least H with gap <= H * dist^alpha on the sample
    alpha_fit: float      # slope of the log-log upper envelope
    pairs: int
    levels: int

    def to_json(self):
        return {"alpha": self.alpha, "H": self.H, "alpha_fit": self.alpha_fit,
                "pairs": self.pairs, "levels": self.levels}


def fit_holder(dist: np.ndarray, gap: np.ndarray, alpha: float, scale: float,
               bins: int = 12, roundoff: float = 1e-12) -> HolderFit:
    """Least constant for ``alpha`` and the envelope slope.

    Gaps below ``roundoff * scale`` are treated as round-off: they count as
    that floor for the envelope, so locally constant maps fit a steep slope
    instead of an undefined one, and they are ignored for ``H``.
    """
    dist = np.asarray(dist, dtype=float)
    gap = np.asarray(gap, dtype=float)
    keep = dist > 0
    dist, gap = dist[keep], gap[keep]
    if len(dist) == 0 or np.all(dist == dist[0]):
        raise ValueError("degenerate sample: all pair distances are equal")
    total = len(dist)
    floor = roundoff * max(scale, 1e-300)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        # gaps at round-off level say nothing about regularity
        ratios = np.where(gap > roundoff * max(scale, 1.0), gap / dist ** alpha, 0.0)
    H = float(np.nanmax(np.where(np.isfinite(gap), ratios, np.inf)))
    signal = gap > floor
    if signal.any() and (~signal).any():
        # pairs far below the last visible gap only flatten the envelope
        keep = dist >= dist[signal].min() / 4.0
        dist, gap = dist[keep], gap[keep]
    logd = np.log(dist)
    logg = np.log(np.maximum(np.where(np.isfinite(gap), gap, np.finfo(float).max), floor))
    levels = np.unique(logd)
    if len(levels) > bins:
        edges = np.linspace(logd.min(), logd.max(), bins + 1)
        label = np.clip(np.digitize(logd, edges[1:-1]), 0, bins - 1)
    else:
        label = np.searchsorted(levels, logd)
    xs, ys = [], []
    for b in np.unique(label):
        sel = label == b
        xs.append(logd[sel].mean())
        ys.append(logg[sel].max())
    alpha_fit = float(np.polyfit(xs, ys, 1)[0]) if len(xs) >= 2 else float("nan")
    return HolderFit(alpha, H, alpha_fit, int(total), len(xs))


def sample_generator_pairs(gen: Generator, count: int, rng: np.random.Generator):
    """Point pairs spread over distance scales and their value gaps (norm metric)."""
    system = gen.system
    dists, gaps, scale = [], [], 0.0
    if isinstance(system, ShiftOfFiniteType):
        depth = getattr(gen, "radius", 4) + 4
        for i in range(count):
            level = i % (depth + 1)
            x, y = random_sft_pair(system, rng, level, radius=depth + 4)
            dists.append(system.metric(x, y))
            gx, gy = gen(x), gen(y)
            gaps.append((gx - gy).norm())
            scale = max(scale, gx.norm(), gy.norm())
    else:
        base = rng.random((count, 2))
        size = 10.0 ** rng.uniform(-6.0, math.log10(0.5), count)
        step = rng.uniform(-1.0, 1.0, (count, 2))
        step /= np.abs(step).max(axis=1, keepdims=True)
        other = (base + step * size[:, None]) % 1.0
        va = gen.evaluate_coords(base) if hasattr(gen, "evaluate_coords") else _coord_values(gen, base)
        vb = gen.evaluate_coords(other) if hasattr(gen, "evaluate_coords") else _coord_values(gen, other)
        delta = np.abs(base - other)
        dists = np.minimum(delta, 1.0 - delta).max(axis=1)
        gaps = norms(va - vb)
        scale = float(max(norms(va).max(), norms(vb).max()))
    return np.asarray(dists), np.asarray(gaps), scale


def _coord_values(gen: Generator, coords: np.ndarray) -> np.ndarray:
    pts = [TorusPoint.from_floats(u, v, gen.system.precision_bits) for u, v in coords]
    return np.stack([gen.values(p, 0, 1)[0] for p in pts])


def random_sft_pair(system: ShiftOfFiniteType, rng, level: int, radius: int = 16):
    """Two admissible points agreeing on ``|i| < level`` and differing at ``+-level``."""
    adj, k = system.adjacency, system.alphabet
    for _ in range(1000):
        x = system.random_point(rng, radius)
        core = [int(s) for s in x.symbols(-radius, radius + 1)]
        side = 1 if level == 0 or rng.random() < 0.5 else -1
        pos = radius + side * level
        new = list(core)
        if side > 0:
            choices = [s for s in range(k) if s != core[pos] and (pos == 0 or adj[core[pos - 1], s])]
            if not choices:
                continue
            new[pos] = choices[rng.integers(len(choices))]
            for i in range(pos + 1, len(new)):
                succ = system._succ[new[i - 1]]
                new[i] = int(succ[rng.integers(len(succ))])
        else:
            choices = [s for s in range(k) if s != core[pos] and adj[s, core[pos + 1]]]
            if not choices:
                continue
            new[pos] = choices[rng.integers(len(choices))]
            for i in range(pos - 1, -1, -1):
                pred = [s for s in range(k) if adj[s, new[i + 1]]]
                new[i] = pred[rng.integers(len(pred))]
        return x, system._finish(new, radius)
    raise RuntimeError(f"no admissible pair found at level {level}")


def holder_estimate(gen: Generator, pair_count: int = 400, rng=None, alpha: float | None = None) -> HolderFit:
    """Fit Hölder data for a generator from sampled pairs."""
    if pair_count < 100:
        raise ValueError("pair_count must be at least 100")
    rng = np.random.default_rng(0) if rng is None else rng
    dists, gaps, scale = sample_generator_pairs(gen, pair_count, rng)
    return fit_holder(dists, gaps, gen.alpha if alpha is None else alpha, scale)
