import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from livsic.cocycle import (
    Cocycle,
    CoboundaryGenerator,
    ConstantGenerator,
    ExprGenerator,
    WindowGenerator,
    fit_holder,
    holder_estimate,
    scan_obstructions,
)
from livsic.dynamics import SymbolPoint
from livsic.ring import MatrixRing, ScalarRing, SingularError, group_dist

R1 = ScalarRing()
M2 = MatrixRing(2)


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def test_zero_steps_is_identity(coboundary, shift2):
    x = shift2.random_point(np.random.default_rng(0))
    assert coboundary.evaluate(0, x) == coboundary.ring.identity


def test_constant_scalar_powers(shift2):
    c = Cocycle(ConstantGenerator(shift2, R1.element(2.0)))
    x = shift2.random_point(np.random.default_rng(0))
    assert float(c.evaluate(5, x)) == 32.0
    assert float(c.evaluate(-3, x)) == 0.125


def test_window_hand_product(shift2):
    table = {(0,): np.diag([2.0, 1.0]), (1,): rotation(math.pi / 4)}
    c = Cocycle(WindowGenerator(shift2, 0, table, M2))
    x = SymbolPoint.periodic((0, 1))
    assert np.allclose(c.evaluate(2, x).value, rotation(math.pi / 4) @ np.diag([2.0, 1.0]), rtol=1e-15)


def test_window_table_must_be_complete_and_invertible(shift2):
    with pytest.raises(ValueError):
        WindowGenerator(shift2, 0, {(0,): 1.0}, R1)
    with pytest.raises(SingularError):
        WindowGenerator(shift2, 0, {(0,): 1.0, (1,): 0.0}, R1)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(-50, 50), st.integers(-50, 50))
def test_cocycle_law(seed, n, k):
    from livsic.cocycle import random_window_table, window_coboundary
    from livsic.dynamics import ShiftOfFiniteType
    s = ShiftOfFiniteType.full_shift(2)
    rng = np.random.default_rng(seed)
    gen = WindowGenerator(s, 1, random_window_table(s, 1, M2, np.random.default_rng(3)), M2)
    for c in (Cocycle(gen), Cocycle(window_coboundary(gen))):
        x = s.random_point(rng)
        assert c.identity_residual(n, k, x) <= 1e-9 * max(1.0, c.evaluate(n + k, x).norm())


def test_identity_residual_trivial_cases(shift2):
    c = Cocycle(ConstantGenerator(shift2, R1.element(2.0)))
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = shift2.random_point(rng)
        n, k = rng.integers(-30, 30, 2)
        assert c.identity_residual(int(n), int(k), x) == 0.0


def test_inverse_relation(coboundary, shift2):
    rng = np.random.default_rng(2)
    for n in (1, 7, 40):
        x = shift2.random_point(rng)
        lhs = coboundary.evaluate(-n, x)
        rhs = coboundary.evaluate(n, shift2.apply(x, -n)).inverse()
        assert (lhs - rhs).norm() <= 1e-9 * rhs.norm()


def test_cache_is_transparent(tstar, shift2):
    from livsic.cocycle import window_coboundary
    gen = window_coboundary(tstar)
    cached, fresh = Cocycle(gen), Cocycle(gen, cache=False)
    x = shift2.random_point(np.random.default_rng(4))
    for n in (1, 3, 64, 100):
        a, b = cached.evaluate(n, x), cached.evaluate(n, x)
        assert np.array_equal(a.value, b.value)
        assert (a - fresh.evaluate(n, x)).norm() <= 1e-12 * max(1.0, a.norm())
        assert (fresh.evaluate(-n, x) - fresh.evaluate_flat(-n, x)).norm() <= 1e-12 * max(1.0, a.norm())


def test_obstruction_examples(shift2, coboundary):
    ident = Cocycle(ConstantGenerator(shift2, M2.identity))
    p = SymbolPoint.periodic((0, 1, 1))
    value, dev = ident.obstruction(p, 3)
    assert value == M2.identity and dev == 0.0
    scaled = Cocycle(coboundary.generator.scaled(math.exp(0.1)))
    _, dev = scaled.obstruction(SymbolPoint.periodic((1,)), 1)
    assert dev >= math.exp(0.1) - 1 - 1e-12
    with pytest.raises(ValueError):
        ident.obstruction(p, 2)


def test_obstruction_telescoping_sft(coboundary):
    scan = scan_obstructions(coboundary, 12)
    assert len(scan.entries) == sum(2 ** n for n in range(1, 13))
    assert scan.max_deviation <= 1e-8


def test_obstruction_telescoping_cat(cat):
    t = ExprGenerator(cat, "exp(scale(sin(x1) + cos(x1 + x2), M))", M2, {"M": [[0.3, 0.1], [-0.2, 0.2]]})
    scan = scan_obstructions(Cocycle(CoboundaryGenerator(t)), 6)
    assert scan.max_deviation <= 1e-8


def test_holder_constant_map(shift2):
    gen = ConstantGenerator(shift2, M2.element([[1.0, 2.0], [0.0, 1.0]]))
    assert holder_estimate(gen, 200, np.random.default_rng(0)).H == 0.0


def test_holder_window(tstar):
    """Sampled constant never exceeds the exact one, which never exceeds the
    combinatorial bound; the sample finds at least half of the exact value."""
    fit = holder_estimate(tstar, 400, np.random.default_rng(0))
    exact = tstar.holder_constant()
    assert fit.H <= exact * (1 + 1e-12)
    assert exact <= tstar.combinatorial_bound() * (1 + 1e-12)
    assert fit.H >= exact / 2
    assert tstar.combinatorial_bound() <= exact * 2 ** tstar.radius * (1 + 1e-12)


def test_holder_torus_below_derivative_bound(cat):
    m = np.array([[0.4, -0.3], [0.2, 0.1]])
    gen = ExprGenerator(cat, "exp(scale(sin(x1), M))", M2, {"M": m.tolist()})
    fit = holder_estimate(gen, 400, np.random.default_rng(1))
    nm = np.abs(m).sum(axis=1).max()
    assert 0 < fit.H <= 2 * math.pi * nm * math.exp(nm)
    assert abs(fit.alpha_fit - 1.0) < 0.2


def test_fit_holder_degenerate():
    with pytest.raises(ValueError):
        fit_holder(np.full(5, 0.5), np.ones(5), 1.0, 1.0)


def test_fit_holder_power_law():
    d = np.logspace(-6, -1, 200)
    fit = fit_holder(d, 3.0 * d ** 0.5, 0.5, 1.0)
    assert fit.H == pytest.approx(3.0)
    assert fit.alpha_fit == pytest.approx(0.5, abs=1e-6)


def test_group_dist_of_generator_values(coboundary, shift2):
    x = shift2.random_point(np.random.default_rng(6))
    a = coboundary.generator(x)
    assert group_dist(a, a) == 0.0
