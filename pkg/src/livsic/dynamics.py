"""Exact hyperbolic base systems.

Two families ship: two-sided shifts of finite type, whose points are
bi-infinite words with eventually periodic tails, and hyperbolic automorphisms
of the 2-torus, whose points have exact rational coordinates.  In both cases
the map and its inverse act exactly, so orbits never drift.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.spatial import cKDTree


class TooFarError(ValueError):
    """The orbit segment does not return within the closing radius."""


class CertificateError(RuntimeError):
    """Recomputed shadowing distances violate the closing bound."""


class BudgetError(RuntimeError):
    """An enumeration would exceed its configured budget."""


# --------------------------------------------------------------------------
# points

def _primitive_root(word: tuple) -> tuple:
    n = len(word)
    for p in range(1, n + 1):
        if n % p == 0 and word[:p] * (n // p) == word:
            return word[:p]
    return word


def _rotate(word: tuple, k: int) -> tuple:
    k %= len(word)
    return word[k:] + word[:k]


@dataclass(frozen=True)
class SymbolPoint:
    """A bi-infinite word ``...LLL core RRR...``.

    ``core[i]`` sits at coordinate ``i - offset``; the right tail repeats
    ``right`` from the end of the core onwards and the left tail repeats
    ``left`` (ending in ``left[-1]``) before the core.  Construction reduces
    to a canonical form, so equal sequences compare equal.
    """

    left: tuple
    core: tuple
    right: tuple
    offset: int = 0

    def __post_init__(self):
        left = _primitive_root(tuple(int(s) for s in self.left))
        right = _primitive_root(tuple(int(s) for s in self.right))
        core = [int(s) for s in self.core]
        offset = int(self.offset)
        if not left or not right:
            raise ValueError("tails must be non-empty words")
        while core and core[-1] == right[-1]:
            right = _rotate(right, -1)
            core.pop()
        start = 0
        while start < len(core) and core[start] == left[0]:
            left = _rotate(left, 1)
            start += 1
        core = core[start:]
        offset -= start
        if not core:
            for _ in range(len(left) * len(right) + 1):
                if left == right or left[-1] != right[-1]:
                    break
                left = _rotate(left, -1)
                right = _rotate(right, -1)
                offset += 1
            if left == right:
                # purely periodic: put the junction at coordinate 0
                right = _rotate(right, offset)
                left = right
                offset = 0
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "core", tuple(core))
        object.__setattr__(self, "offset", offset)

    @classmethod
    def periodic(cls, word) -> "SymbolPoint":
        """The point repeating ``word`` with ``word[0]`` at coordinate 0."""
        word = tuple(word)
        return cls(word, (), word, 0)

    @property
    def is_periodic(self) -> bool:
        return not self.core and self.left == self.right

    def __getitem__(self, i: int) -> int:
        pos = i + self.offset
        m = len(self.core)
        if 0 <= pos < m:
            return self.core[pos]
        if pos >= m:
            return self.right[(pos - m) % len(self.right)]
        return self.left[pos % len(self.left)]

    def symbols(self, lo: int, hi: int) -> np.ndarray:
        """Symbols at coordinates ``lo, ..., hi - 1``."""
        pos = np.arange(lo, hi, dtype=np.int64) + self.offset
        m = len(self.core)
        out = np.empty(pos.shape, dtype=np.int64)
        inside = (pos >= 0) & (pos < m)
        above = pos >= m
        below = pos < 0
        if inside.any():
            out[inside] = np.asarray(self.core, dtype=np.int64)[pos[inside]]
        if above.any():
            r = np.asarray(self.right, dtype=np.int64)
            out[above] = r[(pos[above] - m) % len(r)]
        if below.any():
            lt = np.asarray(self.left, dtype=np.int64)
            out[below] = lt[pos[below] % len(lt)]
        return out

    def shifted(self, steps: int) -> "SymbolPoint":
        return SymbolPoint(self.left, self.core, self.right, self.offset + steps)

    def extent(self) -> tuple[int, int]:
        """Coordinates where the core starts and where the right tail starts."""
        return -self.offset, len(self.core) - self.offset

    def to_json(self) -> dict:
        return {"left": list(self.left), "core": list(self.core),
                "right": list(self.right), "offset": self.offset}

    @classmethod
    def from_json(cls, data: dict) -> "SymbolPoint":
        return cls(tuple(data["left"]), tuple(data["core"]), tuple(data["right"]), int(data["offset"]))


@dataclass(frozen=True)
class TorusPoint:
    """A point ``(a/den, b/den)`` of the 2-torus with exact integer data."""

    a: int
    b: int
    den: int

    def __post_init__(self):
        den = int(self.den)
        if den <= 0:
            raise ValueError("denominator must be positive")
        a, b = int(self.a) % den, int(self.b) % den
        g = math.gcd(math.gcd(a, b), den)
        object.__setattr__(self, "a", a // g)
        object.__setattr__(self, "b", b // g)
        object.__setattr__(self, "den", den // g)

    @classmethod
    def from_fractions(cls, x, y) -> "TorusPoint":
        fx, fy = Fraction(x), Fraction(y)
        den = fx.denominator * fy.denominator // math.gcd(fx.denominator, fy.denominator)
        return cls(fx.numerator * (den // fx.denominator), fy.numerator * (den // fy.denominator), den)

    @classmethod
    def from_floats(cls, x: float, y: float, bits: int = 128) -> "TorusPoint":
        return cls.from_fractions(Fraction(x % 1.0), Fraction(y % 1.0)).requantize(bits)

    def requantize(self, bits: int) -> "TorusPoint":
        den = 1 << bits
        return TorusPoint((self.a * den) // self.den, (self.b * den) // self.den, den)

    @property
    def coords(self) -> tuple[float, float]:
        return self.a / self.den, self.b / self.den

    def fractions(self) -> tuple[Fraction, Fraction]:
        return Fraction(self.a, self.den), Fraction(self.b, self.den)

    def to_json(self) -> dict:
        return {"x": f"{self.a}/{self.den}", "y": f"{self.b}/{self.den}"}

    @classmethod
    def from_json(cls, data: dict) -> "TorusPoint":
        return cls.from_fractions(Fraction(data["x"]), Fraction(data["y"]))


# --------------------------------------------------------------------------
# systems

@dataclass(frozen=True)
class ShadowCertificate:
    """Record of a closed orbit segment.

    ``distances[i]`` is ``dist(sigma^i x, sigma^i p)`` for ``i = 0..period``.
    :attr:`bound_ok` recomputes the check each time it is read.
    """

    system: "HyperbolicSystem" = field(repr=False, compare=False)
    x: object
    p: object
    period: int
    return_distance: float
    distances: tuple

    def bounds(self) -> list[float]:
        s, n = self.system, self.period
        return [2.0 * s.C * self.return_distance * s.contraction(min(i, n - i)) for i in range(n + 1)]

    def margins(self) -> list[float]:
        return [b - d for b, d in zip(self.bounds(), self.distances)]

    @property
    def bound_ok(self) -> bool:
        return all(d <= b * (1.0 + 1e-12) for d, b in zip(self.distances, self.bounds()))

    def to_json(self) -> dict:
        return {
            "x": self.x.to_json(),
            "p": self.p.to_json(),
            "period": self.period,
            "return_distance": self.return_distance,
            "distances": list(self.distances),
            "bounds": self.bounds(),
            "bound_ok": self.bound_ok,
        }


class HyperbolicSystem:
    """Common interface; subclasses set ``delta0``, ``lam`` and ``C``."""

    delta0: float
    lam: float
    C: float

    def apply(self, x, steps: int = 1):
        raise NotImplementedError

    def metric(self, x, y) -> float:
        raise NotImplementedError

    def periodic_points(self, n: int) -> list:
        raise NotImplementedError

    def contraction(self, m: int) -> float:
        """``exp(-lam * m)``."""
        return math.exp(-self.lam * m)

    @property
    def closing_constants(self) -> dict:
        return {"delta0": self.delta0, "lambda": self.lam, "C": self.C}

    def find_returns(self, x, n_min: int, n_max: int, delta: float) -> list[int]:
        """All ``k`` in ``[n_min, n_max]`` with ``dist(x, sigma^k x) < delta``."""
        if n_min > n_max:
            raise ValueError("n_min must not exceed n_max")
        found = []
        y = self.apply(x, n_min)
        for k in range(n_min, n_max + 1):
            if self.metric(x, y) < delta:
                found.append(k)
            y = self.apply(y, 1)
        return found

    def close_orbit(self, x, n: int) -> ShadowCertificate:
        """Shadow the segment ``x, ..., sigma^n x`` by an ``n``-periodic point."""
        if n < 1:
            raise ValueError("period must be positive")
        gap = self.metric(x, self.apply(x, n))
        if gap > self.delta0:
            raise TooFarError(f"dist(x, sigma^{n} x) = {gap:g} exceeds delta0 = {self.delta0:g}")
        p = self._closing_point(x, n)
        if self.apply(p, n) != p:
            raise CertificateError("constructed point is not periodic")
        distances = []
        xi, pi = x, p
        for _ in range(n + 1):
            distances.append(self.metric(xi, pi))
            xi, pi = self.apply(xi, 1), self.apply(pi, 1)
        cert = ShadowCertificate(self, x, p, n, gap, tuple(distances))
        if not cert.bound_ok:
            raise CertificateError(
                f"closing bound violated (worst margin {min(cert.margins()):.3e}); closing constants are wrong"
            )
        return cert

    def _closing_point(self, x, n):
        raise NotImplementedError


class ShiftOfFiniteType(HyperbolicSystem):
    """Two-sided subshift defined by a primitive 0/1 adjacency matrix.

    The metric is ``2^-N`` with ``N`` the smallest ``|i|`` where two words
    differ, which gives the closing constants ``delta0 = 1/2``,
    ``lam = ln 2`` and ``C = 1/2``.
    """

    delta0 = 0.5
    lam = math.log(2.0)
    C = 0.5

    def __init__(self, adjacency):
        adj = np.array(adjacency, dtype=np.int64)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        if not np.isin(adj, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        self.adjacency = adj
        self.alphabet = adj.shape[0]
        if not self._is_primitive():
            raise ValueError("adjacency matrix is not primitive")
        self._succ = [tuple(int(j) for j in np.flatnonzero(adj[i])) for i in range(self.alphabet)]
        self._cycles: dict[int, tuple] = {}

    @classmethod
    def full_shift(cls, k: int = 2) -> "ShiftOfFiniteType":
        return cls(np.ones((k, k), dtype=np.int64))

    def __repr__(self):
        return f"ShiftOfFiniteType(alphabet={self.alphabet})"

    def _is_primitive(self) -> bool:
        k = self.alphabet
        reach = (self.adjacency > 0).astype(np.int64)
        power = reach.copy()
        # Wielandt bound on the primitivity exponent
        for _ in range((k - 1) ** 2 + 1):
            if (power > 0).all():
                return True
            power = ((power @ reach) > 0).astype(np.int64)
        return bool((power > 0).all())

    def contraction(self, m: int) -> float:
        return math.ldexp(1.0, -m)

    def to_json(self) -> dict:
        return {"type": "sft", "alphabet": self.alphabet, "adjacency": self.adjacency.tolist()}

    # -- points ----------------------------------------------------------
    def is_admissible(self, x: SymbolPoint) -> bool:
        adj = self.adjacency
        if any(s >= self.alphabet or s < 0 for s in x.left + x.core + x.right):
            return False
        left = list(x.left) + [x.left[0]]
        bridge = [x.left[-1]] + list(x.core) + [x.right[0]]
        right = list(x.right) + [x.right[0]]
        return all(adj[u, v] for seg in (left, bridge, right) for u, v in zip(seg, seg[1:]))

    def apply(self, x: SymbolPoint, steps: int = 1) -> SymbolPoint:
        return x.shifted(steps)

    def metric(self, x: SymbolPoint, y: SymbolPoint) -> float:
        if x == y:
            return 0.0
        n = self.agreement(x, y)
        return math.ldexp(1.0, -n)

    def agreement(self, x: SymbolPoint, y: SymbolPoint) -> int:
        """Smallest ``|i|`` with ``x_i != y_i`` (the exponent of the metric)."""
        lx, hx = x.extent()
        ly, hy = y.extent()
        period = len(x.left) * len(y.left) * len(x.right) * len(y.right)
        limit = max(abs(lx), abs(hx), abs(ly), abs(hy)) + period + 1
        radius = 8
        while True:
            xs = x.symbols(-radius, radius + 1)
            ys = y.symbols(-radius, radius + 1)
            bad = np.flatnonzero(xs != ys)
            if bad.size:
                return int(np.abs(bad - radius).min())
            if radius > limit:
                raise AssertionError("distinct canonical points agree everywhere")
            radius *= 2

    def random_point(self, rng: np.random.Generator, radius: int = 32) -> SymbolPoint:
        """Random admissible word on ``[-radius, radius]`` closed off by short cycles."""
        s = int(rng.integers(self.alphabet))
        core = [s]
        for _ in range(2 * radius):
            succ = self._succ[core[-1]]
            core.append(int(succ[rng.integers(len(succ))]))
        return self._finish(core, radius)

    def _finish(self, core: list, origin: int) -> SymbolPoint:
        left = self._cycle_through(core[0])
        right = _rotate(self._cycle_through(core[-1]), 1)
        return SymbolPoint(left, tuple(core), right, origin)

    def _cycle_through(self, s: int) -> tuple:
        """Shortest cycle word starting at ``s``; its last symbol feeds back to ``s``."""
        if s in self._cycles:
            return self._cycles[s]
        parent = {s: None}
        queue = deque([s])
        end = None
        while queue and end is None:
            u = queue.popleft()
            for v in self._succ[u]:
                if v == s:
                    end = u
                    break
                if v not in parent:
                    parent[v] = u
                    queue.append(v)
        path = [end]
        while path[-1] != s:
            path.append(parent[path[-1]])
        cycle = tuple(reversed(path))
        self._cycles[s] = cycle
        return cycle

    # -- periodic points -------------------------------------------------
    def count_periodic(self, n: int) -> int:
        return int(np.trace(np.linalg.matrix_power(self.adjacency.astype(object), n)))

    def count_words(self, length: int) -> int:
        if length <= 0:
            return 1
        return int(np.linalg.matrix_power(self.adjacency.astype(object), length - 1).sum())

    def periodic_points(self, n: int, budget: int = 1 << 20) -> list[SymbolPoint]:
        """Every point with ``sigma^n p = p``, in lexicographic order of ``p_0..p_{n-1}``."""
        if n < 1:
            raise ValueError("period must be positive")
        if self.count_periodic(n) > budget:
            raise BudgetError(f"{self.count_periodic(n)} points of period {n} exceed budget {budget}")
        words = []
        adj = self.adjacency

        def extend(word):
            if len(word) == n:
                if adj[word[-1], word[0]]:
                    words.append(tuple(word))
                return
            for v in self._succ[word[-1]]:
                word.append(v)
                extend(word)
                word.pop()

        for s in range(self.alphabet):
            extend([s])
        return [SymbolPoint.periodic(w) for w in words]

    # -- closing ---------------------------------------------------------
    def _closing_point(self, x: SymbolPoint, n: int) -> SymbolPoint:
        word = tuple(int(s) for s in x.symbols(0, n))
        return SymbolPoint.periodic(word)

    # -- dense orbits ----------------------------------------------------
    def covering_walk(self, m: int) -> list[int]:
        """A walk whose length-``m`` windows include every admissible word.

        Greedy traversal of the word graph preferring the largest unused
        symbol, with shortest-path hops when stuck.  On the full shift this
        is the prefer-largest de Bruijn construction.
        """
        if m <= 1:
            walk = [0]
            seen = {0}
            while len(seen) < self.alphabet:
                path = self._path_to(walk[-1], lambda u: u not in seen)
                walk.extend(path)
                seen.update(path)
            return walk
        start = self._lex_min_word(m - 1)
        walk = list(start)
        used = set()
        total = self.count_words(m)
        node = tuple(start)
        while len(used) < total:
            step = None
            for v in reversed(self._succ[node[-1]]):
                if node + (v,) not in used:
                    step = v
                    break
            if step is not None:
                used.add(node + (step,))
                walk.append(step)
                node = node[1:] + (step,)
                continue
            path = self._word_path(node, used)
            for v in path:
                edge = node + (v,)
                used.add(edge)
                walk.append(v)
                node = node[1:] + (v,)
        return walk

    def _lex_min_word(self, length: int) -> tuple:
        word = [0]
        while len(word) < length:
            word.append(self._succ[word[-1]][0])
        return tuple(word)

    def _path_to(self, s: int, goal) -> list[int]:
        parent = {s: None}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in self._succ[u]:
                if v in parent:
                    continue
                parent[v] = u
                if goal(v):
                    path = [v]
                    while parent[path[-1]] != s:
                        path.append(parent[path[-1]])
                    return list(reversed(path))
                queue.append(v)
        raise AssertionError("graph is not strongly connected")

    def _word_path(self, node: tuple, used: set) -> list[int]:
        """Shortest symbol path from ``node`` to a word with an unused out-edge."""
        parent = {node: None}
        queue = deque([node])
        while queue:
            u = queue.popleft()
            for v in self._succ[u[-1]]:
                w = u[1:] + (v,)
                if w in parent:
                    continue
                parent[w] = (u, v)
                if any(w + (t,) not in used for t in self._succ[w[-1]]):
                    path = []
                    cur = w
                    while parent[cur] is not None:
                        prev, sym = parent[cur]
                        path.append(sym)
                        cur = prev
                    return list(reversed(path))
                queue.append(w)
        raise AssertionError("no unused edges reachable")

    def dense_orbit(self, length: int, seed: int = 0) -> tuple[SymbolPoint, float]:
        """A point whose forward core visits every admissible word of the
        largest length that fits in ``length`` steps, with its measured
        coverage radius over orbit indices ``0..length``.

        The rest of the core, up to index ``length``, is a random admissible
        continuation so that no tabulated point sits on a periodic tail.
        """
        if length < 1:
            raise ValueError("length must be positive")
        best = self.covering_walk(1)
        m = 2
        while self.count_words(m) + m - 1 <= length + 1:
            walk = self.covering_walk(m)
            if len(walk) > length + 1:
                break
            best = walk
            m += 1
        rng = np.random.default_rng(seed)
        best = list(best)
        while len(best) < length + 1:
            succ = self._succ[best[-1]]
            best.append(succ[int(rng.integers(len(succ)))])
        x0 = self._finish(best, 0)
        return x0, self.coverage_radius(x0, length)

    def coverage_depth(self, x0: SymbolPoint, length: int) -> int:
        """Largest ``D`` such that every admissible word on ``[-D, D]`` is seen
        centred at some ``sigma^i x0`` with ``0 <= i <= length``; -1 if none."""
        depth = -1
        while True:
            d = depth + 1
            syms = x0.symbols(-d, length + d + 1)
            seen = distinct_windows(syms, 2 * d + 1)
            if seen < self.count_words(2 * d + 1):
                return depth
            depth = d
            if depth > 60:
                return depth

    def coverage_radius(self, x0: SymbolPoint, length: int) -> float:
        return math.ldexp(1.0, -(self.coverage_depth(x0, length) + 1))


def window_keys(symbols: np.ndarray, width: int) -> np.ndarray:
    """One hashable key per sliding window of ``width`` symbols."""
    arr = np.ascontiguousarray(symbols, dtype=np.uint8)
    if width == 0:
        return np.zeros(len(arr) + 1, dtype=np.int64)
    win = np.ascontiguousarray(sliding_window_view(arr, width))
    if width <= 8:
        padded = np.zeros((len(win), 8), dtype=np.uint8)
        padded[:, :width] = win
        return padded.view(np.int64).ravel()
    return win.view(np.dtype((np.void, width))).ravel()


def distinct_windows(symbols: np.ndarray, width: int) -> int:
    return len(np.unique(window_keys(symbols, width)))


def _int_matpow(mat, n: int):
    result = ((1, 0), (0, 1))
    base = tuple(tuple(int(v) for v in row) for row in mat)

    def mm(p, q):
        return (
            (p[0][0] * q[0][0] + p[0][1] * q[1][0], p[0][0] * q[0][1] + p[0][1] * q[1][1]),
            (p[1][0] * q[0][0] + p[1][1] * q[1][0], p[1][0] * q[0][1] + p[1][1] * q[1][1]),
        )

    while n:
        if n & 1:
            result = mm(result, base)
        base = mm(base, base)
        n >>= 1
    return result


class ToralAutomorphism(HyperbolicSystem):
    """A hyperbolic integer matrix acting on the 2-torus.

    ``lam`` is the log of the expanding eigenvalue.  ``C`` comes from the
    eigenbasis: with eigenvectors scaled to unit sup norm and ``P`` their
    matrix, ``C = |P^-1|_inf / (1 - 1/|mu_u|)`` covers both the change of
    basis and the geometric factor of the periodic correction.
    """

    def __init__(self, matrix, precision_bits: int = 128, delta0: float = 0.125):
        a = tuple(tuple(int(v) for v in row) for row in matrix)
        if len(a) != 2 or any(len(r) != 2 for r in a):
            raise ValueError("toral matrix must be 2x2")
        det = a[0][0] * a[1][1] - a[0][1] * a[1][0]
        trace = a[0][0] + a[1][1]
        if abs(det) != 1:
            raise ValueError("toral matrix must have determinant +-1")
        if abs(trace) <= 2:
            raise ValueError("toral matrix needs |trace| > 2")
        self.matrix = a
        self.det = det
        self.inverse_matrix = ((det * a[1][1], -det * a[0][1]), (-det * a[1][0], det * a[0][0]))
        self.precision_bits = int(precision_bits)
        self.delta0 = float(delta0)
        evals, evecs = np.linalg.eig(np.array(a, dtype=float))
        order = np.argsort(-np.abs(evals))
        evals, evecs = evals[order].real, evecs[:, order].real
        if not abs(evals[0]) > 1.0 > abs(evals[1]):
            raise ValueError("toral matrix is not hyperbolic")
        evecs = evecs / np.abs(evecs).max(axis=0)
        self.mu_u, self.mu_s = float(evals[0]), float(evals[1])
        self.eigenbasis = evecs
        self.lam = math.log(abs(self.mu_u))
        p_inv = np.linalg.inv(evecs)
        self.C = float(np.abs(p_inv).sum(axis=1).max()) / (1.0 - 1.0 / abs(self.mu_u))

    @classmethod
    def cat_map(cls, **kwargs) -> "ToralAutomorphism":
        return cls(((2, 1), (1, 1)), **kwargs)

    def __repr__(self):
        return f"ToralAutomorphism({self.matrix})"

    def to_json(self) -> dict:
        return {"type": "toral", "matrix": [list(r) for r in self.matrix], "precision_bits": self.precision_bits,
                "delta0": self.delta0}

    def power(self, steps: int):
        if steps >= 0:
            return _int_matpow(self.matrix, steps)
        return _int_matpow(self.inverse_matrix, -steps)

    def apply(self, x: TorusPoint, steps: int = 1) -> TorusPoint:
        m = self.power(steps)
        return TorusPoint(m[0][0] * x.a + m[0][1] * x.b, m[1][0] * x.a + m[1][1] * x.b, x.den)

    def metric(self, x: TorusPoint, y: TorusPoint) -> float:
        den = x.den * y.den
        worst = 0
        for dx in (x.a * y.den - y.a * x.den, x.b * y.den - y.b * x.den):
            dx %= den
            worst = max(worst, min(dx, den - dx))
        return worst / den

    def random_point(self, rng: np.random.Generator) -> TorusPoint:
        bits = self.precision_bits
        nbytes = (bits + 7) // 8
        a = int.from_bytes(rng.bytes(nbytes), "little") >> (8 * nbytes - bits)
        b = int.from_bytes(rng.bytes(nbytes), "little") >> (8 * nbytes - bits)
        return TorusPoint(a, b, 1 << bits)

    def count_periodic(self, n: int) -> int:
        m = self.power(n)
        return abs((m[0][0] - 1) * (m[1][1] - 1) - m[0][1] * m[1][0])

    def periodic_points(self, n: int, budget: int = 1 << 20) -> list[TorusPoint]:
        """All solutions of ``(A^n - I) p`` integral, sorted by numerators.

        ``p = adj(M) m / det(M)`` for integer ``m``; the columns of ``adj(M)``
        generate the image subgroup of ``(Z/D)^2`` with ``D = |det M|``.
        """
        if n < 1:
            raise ValueError("period must be positive")
        a = self.power(n)
        m = ((a[0][0] - 1, a[0][1]), (a[1][0], a[1][1] - 1))
        det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
        size = abs(det)
        if size > budget:
            raise BudgetError(f"{size} points of period {n} exceed budget {budget}")
        sign = 1 if det > 0 else -1
        adj = ((m[1][1], -m[0][1]), (-m[1][0], m[0][0]))
        g1 = ((sign * adj[0][0]) % size, (sign * adj[1][0]) % size)
        g2 = ((sign * adj[0][1]) % size, (sign * adj[1][1]) % size)
        sub = set()
        v = (0, 0)
        while v not in sub:
            sub.add(v)
            v = ((v[0] + g1[0]) % size, (v[1] + g1[1]) % size)
        points = set(sub)
        shift = g2
        while shift not in points:
            points.update(((s[0] + shift[0]) % size, (s[1] + shift[1]) % size) for s in sub)
            shift = ((shift[0] + g2[0]) % size, (shift[1] + g2[1]) % size)
        if len(points) != size:
            raise AssertionError(f"enumerated {len(points)} points, expected {size}")
        return [TorusPoint(u, w, size) for u, w in sorted(points)]

    def _closing_point(self, x: TorusPoint, n: int) -> TorusPoint:
        # Exact: with e the small lift of A^n x - x, p = x - (A^n - I)^-1 e
        # satisfies A^n p - p integral.
        a = self.power(n)
        den = x.den
        e = []
        for r in (a[0][0] * x.a + a[0][1] * x.b - x.a, a[1][0] * x.a + a[1][1] * x.b - x.b):
            r %= den
            e.append(r - den if 2 * r > den else r)
        m = ((a[0][0] - 1, a[0][1]), (a[1][0], a[1][1] - 1))
        det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
        corr = (m[1][1] * e[0] - m[0][1] * e[1], -m[1][0] * e[0] + m[0][0] * e[1])
        return TorusPoint(x.a * det - corr[0], x.b * det - corr[1], den * det) if det > 0 else \
            TorusPoint(-x.a * det + corr[0], -x.b * det + corr[1], -den * det)

    def orbit_coords(self, x: TorusPoint, start: int, count: int) -> np.ndarray:
        """Float coordinates of ``sigma^(start+i) x`` for ``i < count``."""
        y = self.apply(x, start)
        (p, q), (r, s) = self.matrix
        a, b, den = y.a, y.b, y.den
        out = np.empty((count, 2))
        for i in range(count):
            out[i, 0] = a / den
            out[i, 1] = b / den
            a, b = (p * a + q * b) % den, (r * a + s * b) % den
        return out

    def dense_orbit(self, length: int, grid: int = 64, seed: int = 0) -> tuple[TorusPoint, float]:
        """A pseudo-random full-precision point and its measured coverage radius."""
        if length < 1:
            raise ValueError("length must be positive")
        x0 = self.random_point(np.random.default_rng(seed))
        return x0, self.coverage_radius(x0, length, grid)

    def coverage_radius(self, x0: TorusPoint, length: int, grid: int = 64) -> float:
        pts = self.orbit_coords(x0, 0, length + 1)
        tree = cKDTree(pts % 1.0, boxsize=1.0)
        g = (np.arange(grid) + 0.5) / grid
        probe = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
        dist, _ = tree.query(probe, p=np.inf)
        return float(dist.max())


def system_from_json(spec: dict) -> HyperbolicSystem:
    kind = spec.get("type")
    if kind == "sft":
        adj = spec.get("adjacency")
        if adj is None:
            return ShiftOfFiniteType.full_shift(int(spec["alphabet"]))
        system = ShiftOfFiniteType(adj)
        if "alphabet" in spec and int(spec["alphabet"]) != system.alphabet:
            raise ValueError("alphabet does not match adjacency size")
        return system
    if kind == "toral":
        return ToralAutomorphism(spec["matrix"], int(spec.get("precision_bits", 128)),
                                 float(spec.get("delta0", 0.125)))
    raise ValueError(f"unknown system type {kind!r}")


def point_from_json(data: dict):
    if "core" in data:
        return SymbolPoint.from_json(data)
    return TorusPoint.from_json(data)
