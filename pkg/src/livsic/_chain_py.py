"""Pure numpy versions of the product-chain kernels."""
import numpy as np


def chain_prefix(mats, left=True):
    batch, length, d, _ = mats.shape
    out = np.empty((batch, length + 1, d, d))
    out[:, 0] = np.eye(d)
    for k in range(length):
        if left:
            np.matmul(mats[:, k], out[:, k], out=out[:, k + 1])
        else:
            np.matmul(out[:, k], mats[:, k], out=out[:, k + 1])
    return out


def chain_log_norms(mats, left=True):
    batch, length, d, _ = mats.shape
    res = np.empty((batch, length))
    cur = np.broadcast_to(np.eye(d), (batch, d, d)).copy()
    shift = np.zeros(batch)
    with np.errstate(divide="ignore"):
        for k in range(length):
            cur = mats[:, k] @ cur if left else cur @ mats[:, k]
            nrm = np.abs(cur).sum(axis=-1).max(axis=-1)
            res[:, k] = shift + np.log(nrm)
            rescale = (nrm > 1e100) | ((nrm < 1e-100) & (nrm > 0.0))
            if rescale.any():
                cur[rescale] /= nrm[rescale, None, None]
                shift[rescale] += np.log(nrm[rescale])
    return res
