import numpy as np
import pytest

from livsic import kernels
from livsic._chain_py import chain_log_norms as py_log_norms
from livsic._chain_py import chain_prefix as py_prefix

IMPLS = sorted(kernels.backends())


def _stack(rng, batch, length, d):
    return rng.normal(size=(batch, length, d, d)) + 2 * np.eye(d)


@pytest.mark.parametrize("impl", IMPLS)
@pytest.mark.parametrize("left", [True, False])
def test_prefix_matches_loop(impl, left):
    rng = np.random.default_rng(1)
    mats = _stack(rng, 1, 7, 3)[0]
    out = kernels.chain_prefix(mats, left=left, impl=impl)
    acc = np.eye(3)
    assert np.array_equal(out[0], acc)
    for k, m in enumerate(mats):
        acc = m @ acc if left else acc @ m
        assert np.allclose(out[k + 1], acc, rtol=1e-13)


@pytest.mark.parametrize("impl", IMPLS)
def test_log_norms_survive_overflow(impl):
    mats = np.full((1, 3000, 1, 1), 10.0)
    logs = kernels.chain_log_norms(mats, impl=impl)[0]
    assert np.allclose(logs, np.log(10.0) * np.arange(1, 3001), rtol=1e-12)


def test_backends_agree():
    if "compiled" not in kernels.backends():
        pytest.skip("compiled kernels not built")
    rng = np.random.default_rng(2)
    mats = _stack(rng, 4, 200, 2) * 0.5
    for left in (True, False):
        a = kernels.chain_prefix(mats, left, impl="compiled")
        b = py_prefix(mats, left)
        scale = np.abs(b).sum(axis=-1).max(axis=-1)[..., None, None]
        assert (np.abs(a - b) <= 1e-12 * scale).all()
        assert np.allclose(kernels.chain_log_norms(mats, left, impl="compiled"), py_log_norms(mats, left),
                           rtol=1e-12, atol=1e-12)


def test_product_is_last_prefix():
    rng = np.random.default_rng(3)
    mats = _stack(rng, 2, 9, 2)
    assert np.array_equal(kernels.chain_product(mats), kernels.chain_prefix(mats)[:, -1])


def test_backend_selection():
    assert kernels.BACKEND in ("compiled", "python")
    assert "python" in kernels.backends()
