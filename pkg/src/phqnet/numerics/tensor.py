"""A minimal reverse-mode autodiff tensor over numpy arrays."""

import numpy as np

from ..errors import NonFiniteError

DEFAULT_DTYPE = np.float32


class Tensor:
    """Dense float array that records how it was computed.

    Tensors are treated as immutable values; ``grad`` is the only field that
    changes after construction, and only during :meth:`backward`.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, name=None, _parents=(), _backward=None):
        self.data = data
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.data.shape}, dtype={self.data.dtype})"

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True).reshape(self.data.shape)
        else:
            self.grad += g

    def backward(self, grad=None):
        """Propagate gradients from this node to every recorded ancestor."""
        if grad is None:
            grad = np.ones_like(self.data)
        order = _toposort(self)
        self._accumulate(grad)
        for node in reversed(order):
            if node._backward is None or node.grad is None:
                continue
            node._backward(node.grad)
            # interior gradients are not needed once consumed
            if node._parents:
                node.grad = None

    # arithmetic sugar used by losses and tests
    def __add__(self, other):
        from .ops import add

        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        from .ops import mul

        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from .ops import mul

        return mul(self, -1.0)

    def __sub__(self, other):
        from .ops import add, mul

        return add(self, mul(as_tensor(other, dtype=self.dtype), -1.0))

    def sum(self):
        from .ops import total

        return total(self)


def _toposort(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen and (p.requires_grad or p._parents):
                stack.append((p, False))
    return order


def tensor(values, dtype=DEFAULT_DTYPE, requires_grad=False, name=None):
    """Build a leaf tensor from user data, rejecting NaN/Inf."""
    arr = np.ascontiguousarray(np.asarray(values, dtype=dtype))
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite values in tensor {name or ''}".strip())
    return Tensor(arr, requires_grad=requires_grad, name=name)


def as_tensor(x, dtype=None):
    if isinstance(x, Tensor):
        return x
    arr = np.asarray(x, dtype=dtype or DEFAULT_DTYPE)
    return Tensor(np.ascontiguousarray(arr))


def needs_grad(*ts):
    return any(t.requires_grad or t._parents for t in ts)


def make_node(data, parents, backward):
    """Wrap an op result; drops the graph when no input needs gradients."""
    live = tuple(p for p in parents if p.requires_grad or p._parents)
    if not live:
        return Tensor(data)
    return Tensor(data, _parents=live, _backward=backward)
