"""Banach rings of real matrices and the group metric on their units.

Every ring here is the algebra of ``n x n`` real matrices normed by the
maximum absolute row sum (the operator norm induced by the sup norm on
vectors).  The scalar ring is the ``n = 1`` case, so products along orbits
share one code path regardless of the ring.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class SingularError(ArithmeticError):
    """Raised when an element has no numerically reliable inverse."""


class DimensionError(ValueError):
    """Raised when elements of different rings are combined."""


def _row_sum_norm(value: np.ndarray) -> float:
    return float(np.abs(value).sum(axis=-1).max())


class MatrixRing:
    """Real ``dim x dim`` matrices with the max-absolute-row-sum norm."""

    def __init__(self, dim: int, singular_threshold: float = 1e-12, inverse_tol: float = 1e-10):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)
        self.singular_threshold = singular_threshold
        self.inverse_tol = inverse_tol

    def __eq__(self, other):
        return isinstance(other, MatrixRing) and other.dim == self.dim

    def __hash__(self):
        return hash(("MatrixRing", self.dim))

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"

    @property
    def identity(self) -> "Element":
        return Element(self, np.eye(self.dim))

    @property
    def zero(self) -> "Element":
        return Element(self, np.zeros((self.dim, self.dim)))

    def element(self, value) -> "Element":
        arr = np.array(value, dtype=float)
        if arr.ndim == 0:
            arr = arr * np.eye(self.dim)
        if arr.shape != (self.dim, self.dim):
            raise DimensionError(f"expected shape {(self.dim, self.dim)}, got {arr.shape}")
        return Element(self, arr)

    def to_json(self) -> dict:
        return {"type": "matrix", "dim": self.dim}


class ScalarRing(MatrixRing):
    """The real numbers, stored as ``1 x 1`` matrices."""

    def __init__(self, **kwargs):
        super().__init__(1, **kwargs)

    def __repr__(self):
        return "ScalarRing()"

    def to_json(self) -> dict:
        return {"type": "scalar"}


@dataclass(frozen=True, eq=False)
class Element:
    """An immutable element of a :class:`MatrixRing`."""

    ring: MatrixRing
    value: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.value, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "value", arr)

    def _check(self, other: "Element"):
        if not isinstance(other, Element):
            return NotImplemented
        if other.ring.dim != self.ring.dim:
            raise DimensionError(f"ring dimensions differ: {self.ring.dim} vs {other.ring.dim}")
        return None

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating)):
            return Element(self.ring, self.value * float(other))
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Element(self.ring, self.value @ other.value)

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating)):
            return Element(self.ring, float(other) * self.value)
        return NotImplemented

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Element(self.ring, self.value + other.value)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Element(self.ring, self.value - other.value)

    def __neg__(self):
        return Element(self.ring, -self.value)

    def __eq__(self, other):
        return (
            isinstance(other, Element)
            and other.ring.dim == self.ring.dim
            and np.array_equal(self.value, other.value)
        )

    def __hash__(self):
        return hash((self.ring.dim, self.value.tobytes()))

    def __float__(self):
        if self.ring.dim != 1:
            raise TypeError("only scalar elements convert to float")
        return float(self.value[0, 0])

    def __repr__(self):
        if self.ring.dim == 1:
            return f"Element({self.value[0, 0]!r})"
        return f"Element({self.value.tolist()!r})"

    def norm(self) -> float:
        return _row_sum_norm(self.value)

    def inverse(self) -> "Element":
        return inverse(self)

    def allclose(self, other: "Element", rtol: float = 1e-10, atol: float = 0.0) -> bool:
        return (self - other).norm() <= atol + rtol * max(self.norm(), other.norm())

    def to_json(self):
        return self.value.tolist()


def norm(a: Element) -> float:
    return a.norm()


def mul(a: Element, b: Element) -> Element:
    return a * b


def inverse(a: Element) -> Element:
    """Gauss-Jordan inversion with partial pivoting.

    Raises :class:`SingularError` when a pivot falls below
    ``ring.singular_threshold * norm(a)`` or when the round trip
    ``a * a^-1`` misses the identity by more than ``ring.inverse_tol``
    (relative to the condition estimate).
    """
    ring = a.ring
    n = ring.dim
    scale = a.norm()
    if scale == 0.0 or not math.isfinite(scale):
        raise SingularError("element is zero or not finite")
    work = np.hstack([a.value.astype(float), np.eye(n)])
    threshold = ring.singular_threshold * scale
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(work[col:, col])))
        if abs(work[pivot, col]) < threshold:
            raise SingularError(f"pivot {work[pivot, col]:.3e} below threshold {threshold:.3e}")
        if pivot != col:
            work[[col, pivot]] = work[[pivot, col]]
        work[col] /= work[col, col]
        for row in range(n):
            if row != col and work[row, col] != 0.0:
                work[row] -= work[row, col] * work[col]
    inv = work[:, n:]
    cond = scale * _row_sum_norm(inv)
    residual = _row_sum_norm(a.value @ inv - np.eye(n))
    if residual > ring.inverse_tol * max(1.0, cond):
        raise SingularError(f"inverse residual {residual:.3e} too large (condition ~{cond:.3e})")
    return Element(ring, inv)


def group_dist(f: Element, h: Element) -> float:
    """Distance on the unit group: ``max(|f - h|, |f^-1 - h^-1|)``."""
    return max((f - h).norm(), (inverse(f) - inverse(h)).norm())


def distortion_bound(g: Element) -> float:
    """Upper bound ``max(|g|, |g^-1|)`` on the distortion of ``g``."""
    return max(g.norm(), inverse(g).norm())


def exp_element(m: Element) -> Element:
    """Exponential series, with scaling and squaring once the norm exceeds 1/2."""
    ring = m.ring
    size = m.norm()
    squarings = 0
    if size > 0.5:
        squarings = int(math.ceil(math.log2(size / 0.5)))
    x = m.value / (2.0 ** squarings)
    total = np.eye(ring.dim)
    term = np.eye(ring.dim)
    k = 1
    while True:
        term = term @ x / k
        total = total + term
        if _row_sum_norm(term) < 1e-16 * _row_sum_norm(total):
            break
        k += 1
    for _ in range(squarings):
        total = total @ total
    return Element(ring, total)


# Stack helpers used by the orbit kernels.  Shapes are (..., d, d).

def norms(stack: np.ndarray) -> np.ndarray:
    return np.abs(stack).sum(axis=-1).max(axis=-1)


def inverses(stack: np.ndarray, ring: MatrixRing | None = None) -> np.ndarray:
    """Batched inverse with the same singularity contract as :func:`inverse`."""
    stack = np.asarray(stack, dtype=float)
    threshold = ring.singular_threshold if ring is not None else 1e-12
    tol = ring.inverse_tol if ring is not None else 1e-10
    if stack.shape[-1] == 1:
        vals = stack[..., 0, 0]
        if np.any(np.abs(vals) == 0.0) or not np.all(np.isfinite(vals)):
            raise SingularError("zero or non-finite scalar in stack")
        return 1.0 / stack
    try:
        inv = np.linalg.inv(stack)
    except np.linalg.LinAlgError as exc:
        raise SingularError(str(exc)) from exc
    scale = norms(stack)
    cond = scale * norms(inv)
    if np.any(~np.isfinite(cond)) or np.any(1.0 / cond < threshold):
        raise SingularError("ill-conditioned element in stack")
    eye = np.eye(stack.shape[-1])
    residual = norms(stack @ inv - eye)
    if np.any(residual > tol * np.maximum(1.0, cond)):
        raise SingularError("inverse residual too large in stack")
    return inv


def group_dists(f: np.ndarray, h: np.ndarray, ring: MatrixRing | None = None) -> np.ndarray:
    return np.maximum(norms(f - h), norms(inverses(f, ring) - inverses(h, ring)))


def exp_stack(m: np.ndarray) -> np.ndarray:
    """Batched exponential series with a common scaling exponent."""
    m = np.asarray(m, dtype=float)
    d = m.shape[-1]
    size = float(norms(m).max()) if m.size else 0.0
    squarings = int(math.ceil(math.log2(size / 0.5))) if size > 0.5 else 0
    x = m / (2.0 ** squarings)
    total = np.broadcast_to(np.eye(d), m.shape).copy()
    term = total.copy()
    k = 1
    while True:
        term = term @ x / k
        total = total + term
        if np.all(norms(term) < 1e-16 * norms(total)):
            break
        k += 1
    for _ in range(squarings):
        total = total @ total
    return total


def ring_from_json(spec: dict) -> MatrixRing:
    kind = spec.get("type", "matrix")
    if kind == "scalar":
        return ScalarRing()
    if kind == "matrix":
        return MatrixRing(int(spec["dim"]))
    raise ValueError(f"unknown ring type {kind!r}")
