import math

import numpy as np
import pytest

from livsic.expr import Formula, FormulaError

M = [[0.2, -0.1], [0.3, 0.0]]


def test_trig_uses_turns():
    f = Formula("sin(x1) + cos(x2)", dim=1)
    out = f.evaluate(np.array([[0.25, 0.5]]))
    assert out[0, 0, 0] == pytest.approx(math.sin(math.pi / 2) + math.cos(math.pi))


def test_matrix_products_and_constants():
    f = Formula("exp(scale(sin(x1), M)) * inv(exp(scale(sin(x1), M)))", {"M": M}, dim=2)
    out = f.evaluate(np.random.default_rng(0).random((5, 2)))
    assert np.allclose(out, np.eye(2), atol=1e-14)


def test_scalar_broadcast_to_identity():
    f = Formula("2 + I", dim=2)
    assert np.allclose(f.evaluate(np.zeros((1, 2)))[0], 3 * np.eye(2))


@pytest.mark.parametrize("text", [
    "x1",                      # coordinates outside trig
    "sin(0.5 * x1)",           # non-integer combination
    "sin(x1 * x2)",
    "foo(x1)",
    "M / M",
    "__import__('os')",
    "exp(x=1)",
])
def test_rejects(text):
    with pytest.raises(FormulaError):
        Formula(text, {"M": M}, dim=2).evaluate(np.zeros((1, 2)))


def test_constant_shape_checked():
    with pytest.raises(FormulaError):
        Formula("M", {"M": [[1, 2, 3]]}, dim=2)
