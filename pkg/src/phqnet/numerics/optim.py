"""Parameter containers, initialization, gradient evaluation and Adam."""

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError, ParameterError, StateError
from .tensor import DEFAULT_DTYPE, Tensor


class ParamSet:
    """Ordered ``name -> Tensor`` map of trainable leaves and their gradients."""

    def __init__(self, items=None):
        self._params = OrderedDict()
        for name, value in (items or {}).items():
            self.add(name, value)

    def add(self, name, value, dtype=None):
        if name in self._params:
            raise ParameterError(f"duplicate parameter name {name!r}")
        if isinstance(value, Tensor):
            t = value
            t.requires_grad = True
            t.name = name
        else:
            arr = np.ascontiguousarray(np.asarray(value, dtype=dtype or DEFAULT_DTYPE))
            t = Tensor(arr, requires_grad=True, name=name)
        self._params[name] = t
        return t

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self):
        return list(self._params)

    def grad(self, name):
        p = self._params[name]
        return p.grad if p.grad is not None else np.zeros_like(p.data)

    def zero_grad(self):
        for p in self._params.values():
            p.grad = None

    def count(self):
        """Total number of scalar parameters."""
        return int(sum(p.data.size for p in self._params.values()))

    def astype(self, dtype):
        return ParamSet({n: p.data.astype(dtype) for n, p in self._params.items()})

    def state_dict(self):
        return OrderedDict((n, p.data.copy()) for n, p in self._params.items())


def glorot_uniform(shape, fan_in, fan_out, rng, dtype=DEFAULT_DTYPE):
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape).astype(dtype)


def backward(loss, params):
    """Fill ``params`` gradients with d(loss)/d(param).

    Parameters the loss does not depend on receive an exact zero gradient.
    """
    if loss.data.size != 1:
        raise DimensionError(f"backward needs a scalar loss, got shape {loss.shape}")
    loss.backward()
    for _, p in params.items():
        if p.grad is None:
            p.grad = np.zeros_like(p.data)
    return params


@dataclass
class AdamState:
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 1e-4
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, state):
    """One Adam update with L2 decay folded into the gradient.

    Parameter arrays are replaced, not mutated, so earlier snapshots stay valid.
    """
    if len(params) == 0 or all(p.grad is None for _, p in params.items()):
        raise StateError("adam_step called without populated gradients")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for name, p in params.items():
        w = p.data
        dt = w.dtype.type
        g = p.grad if p.grad is not None else np.zeros_like(w)
        if state.weight_decay:
            g = g + dt(state.weight_decay) * w
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(w)
            v = np.zeros_like(w)
        if m.shape != w.shape:
            raise StateError(f"moment shape {m.shape} does not match parameter {name!r} {w.shape}")
        m = dt(b1) * m + dt(1.0 - b1) * g
        v = dt(b2) * v + dt(1.0 - b2) * (g * g)
        state.m[name] = m
        state.v[name] = v
        mhat = m / dt(c1)
        vhat = v / dt(c2)
        p.data = w - dt(state.learning_rate) * mhat / (np.sqrt(vhat) + dt(state.epsilon))
    return params, state
