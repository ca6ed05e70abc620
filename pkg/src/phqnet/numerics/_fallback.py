"""Pure-numpy implementations of the hot kernels.

Every function here has a twin with the identical signature in the compiled
``_kernels`` extension. Arrays are C-contiguous and share one float dtype.

Conventions
-----------
Causal convolution: ``x`` is ``[B, T, Cin]``, ``w`` is ``[k, Cin, Cout]`` and
tap ``j`` reads the input frame ``t - dilation * (k - 1 - j)``; frames before
``t = 0`` are implicit zeros.

LSTM layer: ``xw`` is the precomputed input projection ``x @ W + b`` with
shape ``[B, T, 4H]`` and gate order (input, forget, cell, output). Initial
hidden and cell states are zero.
"""

import numpy as np


def conv_forward(x, w, b, dilation):
    B, T, C = x.shape
    k, _, cout = w.shape
    y = np.empty((B, T, cout), dtype=x.dtype)
    y[...] = b
    for j in range(k):
        s = dilation * (k - 1 - j)
        if s >= T:
            continue
        # rows t >= s receive x[t - s] @ w[j]
        y[:, s:] += np.matmul(x[:, : T - s], w[j])
    return y


def conv_backward(x, w, gy, dilation):
    B, T, C = x.shape
    k, _, cout = w.shape
    gx = np.zeros_like(x)
    gw = np.zeros_like(w)
    for j in range(k):
        s = dilation * (k - 1 - j)
        if s >= T:
            continue
        gx[:, : T - s] += np.matmul(gy[:, s:], w[j].T)
        gw[j] = np.tensordot(x[:, : T - s], gy[:, s:], axes=([0, 1], [0, 1]))
    gb = gy.sum(axis=(0, 1))
    return gx, gw, gb


def _sigmoid(z):
    return 0.5 * (np.tanh(0.5 * z) + 1.0)


def lstm_forward(xw, u):
    """Run one LSTM layer. Returns ``(h, c, gates)`` with activated gates."""
    B, T, H4 = xw.shape
    H = H4 // 4
    h = np.empty((B, T, H), dtype=xw.dtype)
    c = np.empty((B, T, H), dtype=xw.dtype)
    gates = np.empty_like(xw)
    h_prev = np.zeros((B, H), dtype=xw.dtype)
    c_prev = np.zeros((B, H), dtype=xw.dtype)
    for t in range(T):
        z = xw[:, t] + h_prev @ u
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H : 2 * H])
        g = np.tanh(z[:, 2 * H : 3 * H])
        o = _sigmoid(z[:, 3 * H :])
        c_prev = f * c_prev + i * g
        h_prev = o * np.tanh(c_prev)
        gates[:, t, :H] = i
        gates[:, t, H : 2 * H] = f
        gates[:, t, 2 * H : 3 * H] = g
        gates[:, t, 3 * H :] = o
        c[:, t] = c_prev
        h[:, t] = h_prev
    return h, c, gates


def lstm_backward(gh, h, c, gates, u):
    """Backpropagate through one LSTM layer. Returns ``(gxw, gu)``."""
    B, T, H = h.shape
    gxw = np.empty_like(gates)
    gu = np.zeros_like(u)
    dh_next = np.zeros((B, H), dtype=h.dtype)
    dc_next = np.zeros((B, H), dtype=h.dtype)
    for t in range(T - 1, -1, -1):
        i = gates[:, t, :H]
        f = gates[:, t, H : 2 * H]
        g = gates[:, t, 2 * H : 3 * H]
        o = gates[:, t, 3 * H :]
        c_prev = c[:, t - 1] if t > 0 else np.zeros((B, H), dtype=h.dtype)
        dh = gh[:, t] + dh_next
        tc = np.tanh(c[:, t])
        dc = dh * o * (1.0 - tc * tc) + dc_next
        gz = gxw[:, t]
        gz[:, :H] = dc * g * i * (1.0 - i)
        gz[:, H : 2 * H] = dc * c_prev * f * (1.0 - f)
        gz[:, 2 * H : 3 * H] = dc * i * (1.0 - g * g)
        gz[:, 3 * H :] = dh * tc * o * (1.0 - o)
        dc_next = dc * f
        dh_next = gz @ u.T
        if t > 0:
            gu += h[:, t - 1].T @ gz
    return gxw, gu
