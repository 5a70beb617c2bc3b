import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from livsic.ring import (
    DimensionError,
    MatrixRing,
    ScalarRing,
    SingularError,
    distortion_bound,
    exp_element,
    group_dist,
    inverse,
    inverses,
    mul,
    norm,
    norms,
    ring_from_json,
)

M2 = MatrixRing(2)
R1 = ScalarRing()

entries = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)
mat3 = arrays(np.float64, (3, 3), elements=entries)


def test_mul_examples():
    a = M2.element([[2, 1], [1, 1]])
    assert M2.identity * a == a
    assert a * M2.identity == a
    assert float(R1.element(2) * R1.element(3)) == 6.0
    assert (a * M2.element([[1, -1], [-1, 2]])) == M2.identity
    assert mul(a, M2.identity) == a


def test_inverse_examples():
    assert inverse(M2.identity) == M2.identity
    assert float(R1.element(2).inverse()) == 0.5
    assert M2.element([[2, 1], [1, 1]]).inverse().allclose(M2.element([[1, -1], [-1, 2]]), atol=1e-15)


def test_inverse_singular():
    with pytest.raises(SingularError):
        M2.element([[1, 2], [2, 4]]).inverse()
    with pytest.raises(SingularError):
        R1.zero.inverse()
    with pytest.raises(SingularError):
        inverses(np.array([[[1.0, 2.0], [2.0, 4.0]]]), M2)


def test_group_dist_examples():
    e = M2.identity
    assert group_dist(e, e) == 0.0
    assert group_dist(R1.element(2), R1.element(1)) == 1.0
    assert group_dist(M2.element(np.diag([2.0, 0.5])), e) == 1.0


def test_distortion_bound():
    g = M2.element(np.diag([4.0, 0.5]))
    assert distortion_bound(g) == 4.0
    assert distortion_bound(M2.element(np.diag([0.25, 1.0]))) == 4.0


def test_exp_examples():
    assert exp_element(M2.zero) == M2.identity
    assert float(exp_element(R1.element(math.log(2)))) == pytest.approx(2.0, rel=1e-15)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (2, 2), elements=st.floats(-1.0, 1.0)))
def test_exp_inverse_pair(m):
    m = M2.element(2.0 * m / max(1.0, np.abs(m).sum(axis=1).max()))
    prod = exp_element(m) * exp_element(-m)
    assert (prod - M2.identity).norm() <= 1e-10


def test_exp_matches_scipy():
    from scipy.linalg import expm
    m = np.array([[0.3, -1.7], [2.2, 0.4]])
    assert np.allclose(exp_element(M2.element(m)).value, expm(m), rtol=1e-13, atol=1e-13)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        M2.identity * MatrixRing(3).identity


def test_norm_properties():
    a = M2.element([[1, -2], [3, 0.5]])
    assert norm(a) == 3.5
    assert norm(M2.zero) == 0.0
    assert norm(a) > 0


@settings(max_examples=1000, deadline=None)
@given(mat3, mat3)
def test_submultiplicative(a, b):
    a, b = MatrixRing(3).element(a), MatrixRing(3).element(b)
    lhs, rhs = (a * b).norm(), a.norm() * b.norm()
    assert lhs <= rhs * (1 + 1e-12) + 1e-300
    assert (a + b).norm() <= (a.norm() + b.norm()) * (1 + 1e-12) + 1e-300


def _well_conditioned(m):
    return np.linalg.cond(m) < 1e6 and np.abs(m).max() > 1e-3


@settings(max_examples=300, deadline=None)
@given(mat3)
def test_inverse_roundtrip(m):
    if not _well_conditioned(m):
        return
    a = MatrixRing(3).element(m)
    assert (a * a.inverse() - a.ring.identity).norm() <= 1e-8


@settings(max_examples=300, deadline=None)
@given(mat3, mat3)
def test_inverse_is_lipschitz(m1, m2):
    """|a^-1 - b^-1| <= |a^-1| |a - b| |b^-1| <= M^2 |a - b|."""
    if not (_well_conditioned(m1) and _well_conditioned(m2)):
        return
    r = MatrixRing(3)
    a, b = r.element(m1), r.element(m2)
    ai, bi = a.inverse(), b.inverse()
    M = max(a.norm(), b.norm(), ai.norm(), bi.norm())
    gap = (ai - bi).norm()
    chain = ai.norm() * (a - b).norm() * bi.norm()
    assert gap <= chain * (1 + 1e-6) + 1e-12
    assert chain <= M * M * (a - b).norm() * (1 + 1e-12)


def test_stack_helpers_agree():
    rng = np.random.default_rng(0)
    stack = rng.normal(size=(20, 3, 3)) + 3 * np.eye(3)
    r = MatrixRing(3)
    assert np.allclose(norms(stack), [r.element(s).norm() for s in stack])
    inv = inverses(stack, r)
    assert np.allclose(inv, [r.element(s).inverse().value for s in stack], rtol=1e-10, atol=1e-12)


def test_ring_json_roundtrip():
    assert ring_from_json(M2.to_json()) == M2
    assert ring_from_json(R1.to_json()).dim == 1
    with pytest.raises(ValueError):
        ring_from_json({"type": "quaternion"})
