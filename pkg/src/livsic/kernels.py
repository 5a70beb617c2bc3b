"""Product-chain kernels with a compiled backend and a numpy fallback.

The compiled extension ``livsic._chain`` is used when it imports; setting
``LIVSIC_PURE_PYTHON=1`` forces the numpy fallback.  Both backends take
stacks shaped ``(L, d, d)`` or ``(B, L, d, d)``.

``left=True`` multiplies each new factor on the left (``P_{k+1} = M_k P_k``),
which is the orbit order of a cocycle product; ``left=False`` multiplies on
the right.
"""
import os

import numpy as np

from . import _chain_py

BACKEND = "python"
_impl = _chain_py
if os.environ.get("LIVSIC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _chain as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "compiled"


def _prepare(mats):
    arr = np.ascontiguousarray(mats, dtype=np.float64)
    if arr.ndim == 3:
        return arr[None], True
    if arr.ndim != 4 or arr.shape[-1] != arr.shape[-2]:
        raise ValueError(f"expected (L, d, d) or (B, L, d, d), got {arr.shape}")
    return arr, False


def _resolve(impl):
    """``None`` for the selected backend, a backend name, or a module."""
    if impl is None:
        return _impl
    if isinstance(impl, str):
        found = backends()
        if impl not in found:
            raise ValueError(f"backend {impl!r} unavailable; have {sorted(found)}")
        return found[impl]
    return impl


def chain_prefix(mats, left=True, impl=None):
    """All partial products ``P_0 = I, ..., P_L``; shape (..., L+1, d, d)."""
    arr, squeeze = _prepare(mats)
    out = _resolve(impl).chain_prefix(arr, bool(left))
    return out[0] if squeeze else out


def chain_product(mats, left=True, impl=None):
    return chain_prefix(mats, left, impl)[..., -1, :, :]


def chain_log_norms(mats, left=True, impl=None):
    """``log |P_k|`` for ``k = 1..L`` with renormalisation against overflow."""
    arr, squeeze = _prepare(mats)
    out = _resolve(impl).chain_log_norms(arr, bool(left))
    return out[0] if squeeze else out


def backends():
    """Available implementations keyed by name."""
    found = {"python": _chain_py}
    try:
        from . import _chain as compiled
    except ImportError:
        pass
    else:
        found["compiled"] = compiled
    return found
