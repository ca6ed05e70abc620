"""Differentiable operations: layers, activations, and losses."""

import numpy as np

from ..errors import DimensionError, LabelError, NonFiniteError, ParameterError
from . import backend
from .tensor import Tensor, as_tensor, make_node

BCE_EPS = 1e-7


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def add(a, b):
    a, b = as_tensor(a), as_tensor(b, dtype=a.dtype if isinstance(a, Tensor) else None)
    out = a.data + b.data

    def backward(g):
        if a.requires_grad or a._parents:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad or b._parents:
            b._accumulate(_unbroadcast(g, b.shape))

    return make_node(out, (a, b), backward)


def mul(a, b):
    """Elementwise product; ``b`` may be a python scalar."""
    a = as_tensor(a)
    if np.isscalar(b):
        scale = a.data.dtype.type(b)

        def backward_scalar(g):
            a._accumulate(g * scale)

        return make_node(a.data * scale, (a,), backward_scalar)
    b = as_tensor(b, dtype=a.dtype)
    out = a.data * b.data

    def backward(g):
        if a.requires_grad or a._parents:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad or b._parents:
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return make_node(out, (a, b), backward)


def total(x):
    def backward(g):
        x._accumulate(np.broadcast_to(g, x.shape))

    return make_node(x.data.sum(keepdims=False).reshape(()), (x,), backward)


def reshape(x, shape):
    def backward(g):
        x._accumulate(g.reshape(x.shape))

    return make_node(x.data.reshape(shape), (x,), backward)


def dense(x, w, b):
    """Affine map along the trailing axis: ``x @ w + b``."""
    if w.ndim != 2 or x.shape[-1] != w.shape[0]:
        raise DimensionError(f"dense: input trailing extent {x.shape[-1]} vs weights {w.shape}")
    if b.shape != (w.shape[1],):
        raise DimensionError(f"dense: bias shape {b.shape} vs output width {w.shape[1]}")
    lead = x.shape[:-1]
    x2 = x.data.reshape(-1, w.shape[0])
    out = (x2 @ w.data + b.data).reshape(*lead, w.shape[1])

    def backward(g):
        g2 = g.reshape(-1, w.shape[1])
        if x.requires_grad or x._parents:
            x._accumulate((g2 @ w.data.T).reshape(x.shape))
        if w.requires_grad:
            w._accumulate(x2.T @ g2)
        if b.requires_grad:
            b._accumulate(g2.sum(axis=0))

    return make_node(out, (x, w, b), backward)


def relu(x):
    mask = x.data > 0
    out = np.maximum(x.data, x.data.dtype.type(0))  # NaN propagates

    def backward(g):
        x._accumulate(g * mask)

    return make_node(out, (x,), backward)


def sigmoid(x):
    out = 0.5 * (np.tanh(0.5 * x.data) + 1.0)

    def backward(g):
        x._accumulate(g * out * (1.0 - out))

    return make_node(out.astype(x.dtype, copy=False), (x,), backward)


def dropout(x, p, train, rng):
    """Inverted dropout: survivors are scaled by ``1/(1-p)`` in train mode."""
    if not 0.0 <= p < 1.0:
        raise ParameterError(f"dropout probability must be in [0, 1), got {p}")
    if not train or p == 0.0:
        return x
    keep = rng.random(x.shape) >= p
    scale = (keep / (1.0 - p)).astype(x.dtype)
    out = x.data * scale

    def backward(g):
        x._accumulate(g * scale)

    return make_node(out, (x,), backward)


def causal_conv1d(x, w, b, dilation=1):
    """Dilated causal convolution over ``[T, Cin]`` or ``[B, T, Cin]`` input.

    ``w`` has shape ``[k, Cin, Cout]``; output frame ``t`` reads input frames
    ``t - dilation*(k-1) .. t`` with zeros before the first frame.
    """
    if dilation < 1:
        raise ParameterError(f"dilation must be >= 1, got {dilation}")
    if w.ndim != 3 or w.shape[0] < 1:
        raise DimensionError(f"conv kernel must be [k, in, out], got {w.shape}")
    squeeze = x.ndim == 2
    if x.ndim not in (2, 3):
        raise DimensionError(f"conv input must be [T, C] or [B, T, C], got {x.shape}")
    if x.shape[-1] != w.shape[1]:
        raise DimensionError(f"conv input channels {x.shape[-1]} vs kernel {w.shape[1]}")
    if b.shape != (w.shape[2],):
        raise DimensionError(f"conv bias {b.shape} vs out channels {w.shape[2]}")
    if x.shape[-2] == 0:
        raise DimensionError("conv input has no frames")
    k = backend.kernels
    xd = np.ascontiguousarray(x.data[None] if squeeze else x.data)
    wd = np.ascontiguousarray(w.data)
    out = k.conv_forward(xd, wd, np.ascontiguousarray(b.data), int(dilation))
    if squeeze:
        out = out[0]

    def backward(g):
        gd = np.ascontiguousarray(g[None] if squeeze else g)
        gx, gw, gb = k.conv_backward(xd, wd, gd, int(dilation))
        if x.requires_grad or x._parents:
            x._accumulate(gx[0] if squeeze else gx)
        if w.requires_grad:
            w._accumulate(gw)
        if b.requires_grad:
            b._accumulate(gb)

    return make_node(out, (x, w, b), backward)


def lstm_layer(x, w, u, b):
    """One LSTM layer over ``[B, T, in]``; returns the hidden sequence ``[B, T, H]``.

    Gate order is (input, forget, cell, output) in the columns of ``w``, ``u``
    and ``b``; the initial state is zero.
    """
    if x.ndim != 3:
        raise DimensionError(f"lstm input must be [B, T, in], got {x.shape}")
    H = u.shape[0]
    if w.shape != (x.shape[2], 4 * H) or u.shape != (H, 4 * H) or b.shape != (4 * H,):
        raise DimensionError(
            f"lstm weight shapes {w.shape}, {u.shape}, {b.shape} do not fit input {x.shape}"
        )
    k = backend.kernels
    B, T, n_in = x.shape
    x2 = x.data.reshape(B * T, n_in)
    xw = np.ascontiguousarray((x2 @ w.data + b.data).reshape(B, T, 4 * H))
    ud = np.ascontiguousarray(u.data)
    h, c, gates = k.lstm_forward(xw, ud)

    def backward(g):
        gxw, gu = k.lstm_backward(np.ascontiguousarray(g), h, c, gates, ud)
        g2 = gxw.reshape(B * T, 4 * H)
        if x.requires_grad or x._parents:
            x._accumulate((g2 @ w.data.T).reshape(x.shape))
        if w.requires_grad:
            w._accumulate(x2.T @ g2)
        if u.requires_grad:
            u._accumulate(gu)
        if b.requires_grad:
            b._accumulate(g2.sum(axis=0))

    return make_node(h, (x, w, u, b), backward)


def concat(parts, axis=-1):
    datas = [p.data for p in parts]
    out = np.concatenate(datas, axis=axis)
    ax = axis % out.ndim
    bounds = np.cumsum([0] + [d.shape[ax] for d in datas])

    def backward(g):
        for p, lo, hi in zip(parts, bounds[:-1], bounds[1:]):
            if p.requires_grad or p._parents:
                idx = [slice(None)] * g.ndim
                idx[ax] = slice(lo, hi)
                p._accumulate(g[tuple(idx)])

    return make_node(out, tuple(parts), backward)


def _check_lengths(x, lengths):
    lengths = np.asarray(lengths, dtype=np.int64)
    if x.ndim != 3 or lengths.shape != (x.shape[0],):
        raise DimensionError(f"expected [B, T, C] input and B lengths, got {x.shape}, {lengths.shape}")
    if np.any(lengths < 1) or np.any(lengths > x.shape[1]):
        raise DimensionError(f"lengths must lie in [1, {x.shape[1]}]")
    return lengths


def take_last(x, lengths):
    """Frame ``lengths[b] - 1`` of each sequence in a padded batch."""
    lengths = _check_lengths(x, lengths)
    rows = np.arange(x.shape[0])
    out = x.data[rows, lengths - 1]

    def backward(g):
        gx = np.zeros_like(x.data)
        gx[rows, lengths - 1] = g
        x._accumulate(gx)

    return make_node(out, (x,), backward)


def masked_max(x, lengths):
    """Per-channel maximum over the valid frames of each sequence."""
    lengths = _check_lengths(x, lengths)
    valid = np.arange(x.shape[1])[None, :] < lengths[:, None]
    filled = np.where(valid[:, :, None], x.data, -np.inf)
    arg = filled.argmax(axis=1)
    rows = np.arange(x.shape[0])[:, None]
    cols = np.arange(x.shape[2])[None, :]
    out = x.data[rows, arg, cols]

    def backward(g):
        gx = np.zeros_like(x.data)
        gx[rows, arg, cols] = g
        x._accumulate(gx)

    return make_node(out, (x,), backward)


def masked_mean(x, lengths):
    """Per-channel mean over the valid frames of each sequence."""
    lengths = _check_lengths(x, lengths)
    valid = (np.arange(x.shape[1])[None, :] < lengths[:, None]).astype(x.dtype)
    denom = lengths.astype(x.dtype)[:, None]
    out = (x.data * valid[:, :, None]).sum(axis=1) / denom

    def backward(g):
        x._accumulate(valid[:, :, None] * (g / denom)[:, None, :])

    return make_node(out, (x,), backward)


def _check_finite(name, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteError(f"{name}: non-finite input")


def bce_loss(prob, target, eps=BCE_EPS):
    """Mean binary cross entropy of probabilities clamped to ``[eps, 1-eps]``."""
    y = np.asarray(target, dtype=prob.dtype)
    if y.shape != prob.shape:
        raise DimensionError(f"bce_loss: prob {prob.shape} vs target {y.shape}")
    if not np.all((y == 0) | (y == 1)):
        raise LabelError("bce_loss targets must be 0 or 1")
    _check_finite("bce_loss", prob.data)
    p = np.clip(prob.data, eps, 1.0 - eps)
    n = max(p.size, 1)
    loss = -(y * np.log(p) + (1.0 - y) * np.log1p(-p)).sum() / n
    inside = (prob.data >= eps) & (prob.data <= 1.0 - eps)

    def backward(g):
        grad = (-(y / p) + (1.0 - y) / (1.0 - p)) / n
        prob._accumulate(g * grad * inside)

    return make_node(np.asarray(loss, dtype=prob.dtype), (prob,), backward)


def mse_loss(pred, target):
    """Mean of squared differences."""
    y = np.asarray(target, dtype=pred.dtype)
    if y.shape != pred.shape:
        raise DimensionError(f"mse_loss: pred {pred.shape} vs target {y.shape}")
    _check_finite("mse_loss", pred.data, y)
    diff = pred.data - y
    n = max(diff.size, 1)
    loss = (diff * diff).sum() / n

    def backward(g):
        pred._accumulate(g * 2.0 * diff / n)

    return make_node(np.asarray(loss, dtype=pred.dtype), (pred,), backward)


def lstm_forward(x, params, layers, prefix="lstm", dropout_p=0.0, train=False, rng=None):
    """Stacked LSTM over ``[T, in]`` or ``[B, T, in]``; returns the top hidden sequence.

    Layer ``i`` reads ``{prefix}{i}.W``, ``.U`` and ``.b`` from ``params``.
    Dropout, when enabled, is applied to every layer's output sequence.
    """
    squeeze = x.ndim == 2
    h = reshape(x, (1,) + x.shape) if squeeze else x
    for i in range(layers):
        name = f"{prefix}{i}"
        if f"{name}.W" not in params:
            raise DimensionError(f"missing LSTM parameters for layer {name}")
        h = lstm_layer(h, params[f"{name}.W"], params[f"{name}.U"], params[f"{name}.b"])
        h = dropout(h, dropout_p, train, rng)
    if squeeze:
        h = reshape(h, h.shape[1:])
    return h
