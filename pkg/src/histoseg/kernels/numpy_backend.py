"""Pure-NumPy fallback for the convolution hot kernels.

Convolutions are lowered to im2col + BLAS matmul. The im2col scratch is
chunked over the batch so peak memory stays bounded; results are bitwise
independent of the chunking because every output element is a fixed-order
dot product over the kernel axis.
"""

import numpy as np

_SCRATCH_BYTES = 96 * 2**20


def _pad1(x):
    return np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))


def _batch_step(ci, h, w, itemsize):
    per_sample = ci * 9 * h * w * itemsize
    return max(1, _SCRATCH_BYTES // max(per_sample, 1))


def conv3x3_fwd(x, w, b=None):
    """Same-padding 3x3 convolution.

    x: (B, Ci, H, W), w: (Co, Ci, 3, 3), b: (Co,) or None -> (B, Co, H, W).
    """
    bsz, ci, h, wd = x.shape
    co = w.shape[0]
    xp = _pad1(x)
    y = np.empty((bsz, co, h, wd), dtype=x.dtype)
    step = _batch_step(ci, h, wd, x.dtype.itemsize)
    for lo in range(0, bsz, step):
        hi = min(bsz, lo + step)
        v = np.lib.stride_tricks.sliding_window_view(xp[lo:hi], (3, 3), axis=(2, 3))
        y[lo:hi] = np.tensordot(v, w, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if b is not None:
        y += b[None, :, None, None]
    return y


def conv3x3_bwd(x, w, dy):
    """Gradients of conv3x3_fwd: returns (dx, dw, db)."""
    bsz, ci, h, wd = x.shape
    db = dy.sum(axis=(0, 2, 3))
    xp = _pad1(x)
    dw = np.zeros_like(w)
    step = _batch_step(ci, h, wd, x.dtype.itemsize)
    for lo in range(0, bsz, step):
        hi = min(bsz, lo + step)
        v = np.lib.stride_tricks.sliding_window_view(xp[lo:hi], (3, 3), axis=(2, 3))
        dw += np.tensordot(dy[lo:hi], v, axes=([0, 2, 3], [0, 2, 3]))
    # dx is the correlation of dy with the spatially flipped, channel-swapped kernel
    wr = np.ascontiguousarray(np.flip(w, axis=(2, 3)).transpose(1, 0, 2, 3))
    dx = conv3x3_fwd(dy, wr, None)
    return dx, dw, db
