"""Small numerically-careful primitives used across the package.

Everything downstream works in log-space with -inf as the mass of carved-out
states, so these helpers must tolerate -inf without producing NaN.
"""

from __future__ import annotations

import numpy as np


def softplus(x):
    """log(1 + e^x), elementwise, stable for large |x|."""
    return np.logaddexp(0.0, x)


def log_sigmoid(x):
    """log s(x) = -softplus(-x), elementwise, stable for large |x|."""
    return -np.logaddexp(0.0, -x)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def logsumexp(x, axis=None):
    """log sum exp with max-shifting; an all -inf reduction stays -inf."""
    x = np.asarray(x, dtype=np.float64)
    if axis is None and x.size == 0:
        return -np.inf
    m = np.max(x, axis=axis, keepdims=True)
    shift = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(x - shift), axis=axis))
    if axis is None:
        return float(out + shift.reshape(()))
    return out + np.squeeze(shift, axis=axis)
