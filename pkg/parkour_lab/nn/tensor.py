import contextlib
import threading

import numpy as np

_state = threading.local()
_DTYPE = {"value": np.float32}


def get_default_dtype():
    return _DTYPE["value"]


def set_default_dtype(dtype):
    """Switch new tensors between 32-bit (training) and 64-bit (checks)"""
    dtype = np.dtype(dtype).type
    if dtype not in (np.float32, np.float64):
        raise ValueError(
            "Tensors hold float32 or float64 values, got {}".format(dtype)
        )
    _DTYPE["value"] = dtype


@contextlib.contextmanager
def precision(dtype):
    previous = get_default_dtype()
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(previous)


def grad_enabled():
    return getattr(_state, "enabled", True)


@contextlib.contextmanager
def no_grad():
    """Build no graph inside the block (inference during rollouts)"""
    previous = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


class Tensor:
    """
    Array with a gradient slot and the function that produced it

    Attributes
    ----------
    data : numpy.ndarray
        Values in the default float dtype
    grad : numpy.ndarray or None
        Accumulated gradient, same shape as data
    requires_grad : bool
        Leaf tensors with this flag receive gradients

    Methods
    -------
    backward(grad=None):
        Accumulate gradients of this tensor into every leaf it depends on
    """

    def __init__(self, data, requires_grad=False, dtype=None):
        self.data = np.asarray(data, dtype=dtype or get_default_dtype())
        self.grad = None
        self.requires_grad = requires_grad
        self._ctx = None

    def __repr__(self):
        return "Tensor(shape={}, dtype={}, requires_grad={})".format(
            self.shape, self.data.dtype, self.requires_grad
        )

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def T(self):
        return self.transpose()

    def numpy(self):
        return self.data

    def item(self):
        return self.data.item()

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        if grad is None:
            if self.size != 1:
                raise ValueError(
                    "backward() without a gradient needs a scalar, got "
                    "shape {}".format(self.shape)
                )
            grad = np.ones_like(self.data)
        order, seen, stack = [], set(), [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            if node._ctx is not None:
                for parent in node._ctx.parents:
                    if id(parent) not in seen:
                        stack.append((parent, False))

        grads = {id(self): np.asarray(grad, dtype=self.data.dtype)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._ctx is None:
                if node.requires_grad:
                    node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._ctx.parents, node._ctx.backward(g)):
                if pg is None or not _tracks(parent):
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg

    # Operators
    def __neg__(self):
        return Neg.apply(self)

    def __add__(self, other):
        return Add.apply(self, tensor(other))

    def __radd__(self, other):
        return Add.apply(tensor(other), self)

    def __sub__(self, other):
        return Sub.apply(self, tensor(other))

    def __rsub__(self, other):
        return Sub.apply(tensor(other), self)

    def __mul__(self, other):
        return Mul.apply(self, tensor(other))

    def __rmul__(self, other):
        return Mul.apply(tensor(other), self)

    def __truediv__(self, other):
        return Div.apply(self, tensor(other))

    def __rtruediv__(self, other):
        return Div.apply(tensor(other), self)

    def __pow__(self, exponent):
        return Pow.apply(self, exponent=float(exponent))

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return Slice.apply(self, index=index)

    # Elementwise and reductions
    def exp(self):
        return Exp.apply(self)

    def log(self):
        return Log.apply(self)

    def tanh(self):
        return Tanh.apply(self)

    def sigmoid(self):
        return Sigmoid.apply(self)

    def relu(self):
        return Relu.apply(self)

    def elu(self):
        return Elu.apply(self)

    def square(self):
        return self * self

    def sum(self, axis=None, keepdims=False):
        return Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        count = self.size if axis is None else _axis_count(self.shape, axis)
        return self.sum(axis, keepdims) * (1.0 / count)

    def softmax(self, axis=-1):
        return Softmax.apply(self, axis=axis)

    def clip(self, low, high):
        return Clip.apply(self, low=low, high=high)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Reshape.apply(self, shape=shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return Transpose.apply(self, axes=axes or None)


def tensor(value):
    return value if isinstance(value, Tensor) else Tensor(value)


def _tracks(t):
    return t.requires_grad or t._ctx is not None


def _axis_count(shape, axis):
    axes = axis if isinstance(axis, tuple) else (axis,)
    return int(np.prod([shape[a] for a in axes]))


def _unbroadcast(grad, shape):
    """Sum a broadcast gradient back down to an input shape"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op, a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ValueError(
            "{}: shapes {} and {} do not broadcast".format(
                op, a.shape, b.shape
            )
        ) from None


class Function:
    """Node of the autodiff graph; subclasses define forward and backward"""

    def __init__(self, *parents, **kwargs):
        self.parents = parents
        self.kwargs = kwargs

    @classmethod
    def apply(cls, *parents, **kwargs):
        ctx = cls(*parents, **kwargs)
        out = Tensor(ctx.forward(*[p.data for p in parents], **kwargs))
        if grad_enabled() and any(_tracks(p) for p in parents):
            out._ctx = ctx
        return out

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError


class Neg(Function):
    def forward(self, x):
        return -x

    def backward(self, grad):
        return (-grad,)


class Add(Function):
    def forward(self, x, y):
        self.shapes = (x.shape, y.shape)
        _broadcast_shape("add", *self.parents)
        return x + y

    def backward(self, grad):
        return tuple(_unbroadcast(grad, s) for s in self.shapes)


class Sub(Function):
    def forward(self, x, y):
        self.shapes = (x.shape, y.shape)
        _broadcast_shape("sub", *self.parents)
        return x - y

    def backward(self, grad):
        return (
            _unbroadcast(grad, self.shapes[0]),
            _unbroadcast(-grad, self.shapes[1]),
        )


class Mul(Function):
    def forward(self, x, y):
        _broadcast_shape("mul", *self.parents)
        self.x, self.y = x, y
        return x * y

    def backward(self, grad):
        return (
            _unbroadcast(grad * self.y, self.x.shape),
            _unbroadcast(grad * self.x, self.y.shape),
        )


class Div(Function):
    def forward(self, x, y):
        _broadcast_shape("div", *self.parents)
        self.x, self.y = x, y
        return x / y

    def backward(self, grad):
        return (
            _unbroadcast(grad / self.y, self.x.shape),
            _unbroadcast(-grad * self.x / (self.y * self.y), self.y.shape),
        )


class Pow(Function):
    def forward(self, x, exponent):
        self.x, self.exponent = x, exponent
        return x**exponent

    def backward(self, grad):
        return (grad * self.exponent * self.x ** (self.exponent - 1),)


class Exp(Function):
    def forward(self, x):
        self.out = np.exp(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Log(Function):
    def forward(self, x):
        self.x = x
        return np.log(x)

    def backward(self, grad):
        return (grad / self.x,)


class Tanh(Function):
    def forward(self, x):
        self.out = np.tanh(x)
        return self.out

    def backward(self, grad):
        return (grad * (1.0 - self.out * self.out),)


class Sigmoid(Function):
    def forward(self, x):
        self.out = 0.5 * (np.tanh(0.5 * x) + 1.0)
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1.0 - self.out),)


class Relu(Function):
    def forward(self, x):
        self.mask = x > 0
        return x * self.mask

    def backward(self, grad):
        return (grad * self.mask,)


class Elu(Function):
    def forward(self, x):
        self.mask = x > 0
        self.neg = np.exp(np.minimum(x, 0.0))
        return np.where(self.mask, x, self.neg - 1.0)

    def backward(self, grad):
        return (grad * np.where(self.mask, 1.0, self.neg),)


class Clip(Function):
    def forward(self, x, low, high):
        self.mask = (x >= low) & (x <= high)
        return np.clip(x, low, high)

    def backward(self, grad):
        return (grad * self.mask,)


class Minimum(Function):
    def forward(self, x, y):
        _broadcast_shape("minimum", *self.parents)
        self.shapes = (x.shape, y.shape)
        self.pick = x <= y
        return np.minimum(x, y)

    def backward(self, grad):
        return (
            _unbroadcast(grad * self.pick, self.shapes[0]),
            _unbroadcast(grad * ~self.pick, self.shapes[1]),
        )


class Sum(Function):
    def forward(self, x, axis, keepdims):
        self.shape = x.shape
        return np.sum(x, axis=axis, keepdims=keepdims)

    def backward(self, grad):
        axis, keepdims = self.kwargs["axis"], self.kwargs["keepdims"]
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Softmax(Function):
    def forward(self, x, axis):
        shifted = np.exp(x - np.max(x, axis=axis, keepdims=True))
        self.out = shifted / np.sum(shifted, axis=axis, keepdims=True)
        return self.out

    def backward(self, grad):
        axis = self.kwargs["axis"]
        inner = np.sum(grad * self.out, axis=axis, keepdims=True)
        return (self.out * (grad - inner),)


class Reshape(Function):
    def forward(self, x, shape):
        self.shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.shape),)


class Transpose(Function):
    def forward(self, x, axes):
        self.axes = axes
        return np.transpose(x, axes)

    def backward(self, grad):
        if self.axes is None:
            return (np.transpose(grad),)
        return (np.transpose(grad, np.argsort(self.axes)),)


class Slice(Function):
    def forward(self, x, index):
        self.shape, self.dtype = x.shape, x.dtype
        return x[index]

    def backward(self, grad):
        out = np.zeros(self.shape, dtype=self.dtype)
        index = self.kwargs["index"]
        if _basic_index(index):
            out[index] += grad
        else:
            np.add.at(out, index, grad)
        return (out,)


def _basic_index(index):
    parts = index if isinstance(index, tuple) else (index,)
    return all(
        p is None or p is Ellipsis or isinstance(p, (int, slice))
        for p in parts
    )


class Concat(Function):
    def forward(self, *xs, axis):
        self.sizes = [x.shape[axis] for x in xs]
        return np.concatenate(xs, axis=axis)

    def backward(self, grad):
        cuts = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, cuts, axis=self.kwargs["axis"]))


class MatMul(Function):
    def forward(self, x, y):
        self.x, self.y = x, y
        return np.matmul(x, y)

    def backward(self, grad):
        gx = np.matmul(grad, np.swapaxes(self.y, -1, -2))
        gy = np.matmul(np.swapaxes(self.x, -1, -2), grad)
        return (
            _unbroadcast(gx, self.x.shape),
            _unbroadcast(gy, self.y.shape),
        )


def _im2col_indices(channels, height, width, kernel, stride, padding):
    kh, kw = kernel
    oh = (height + 2 * padding - kh) // stride + 1
    ow = (width + 2 * padding - kw) // stride + 1
    i0 = np.tile(np.repeat(np.arange(kh), kw), channels)
    i1 = stride * np.repeat(np.arange(oh), ow)
    j0 = np.tile(np.arange(kw), kh * channels)
    j1 = stride * np.tile(np.arange(ow), oh)
    i = i0[:, None] + i1[None, :]
    j = j0[:, None] + j1[None, :]
    k = np.repeat(np.arange(channels), kh * kw)[:, None]
    return k, i, j, oh, ow


class Conv2d(Function):
    def forward(self, x, w, b, stride, padding):
        n, c, h, wd = x.shape
        out_c = w.shape[0]
        self.index = _im2col_indices(c, h, wd, w.shape[2:], stride, padding)
        k, i, j, oh, ow = self.index
        pad = ((0, 0), (0, 0), (padding, padding), (padding, padding))
        self.padded_shape = (c, h + 2 * padding, wd + 2 * padding)
        self.x_shape, self.w = x.shape, w
        self.cols = np.pad(x, pad)[:, k, i, j]
        out = np.einsum("ok,nkp->nop", w.reshape(out_c, -1), self.cols)
        out = out + b[None, :, None]
        return out.reshape(n, out_c, oh, ow)

    def backward(self, grad):
        n, out_c = grad.shape[:2]
        k, i, j, _, _ = self.index
        padding = self.kwargs["padding"]
        g = grad.reshape(n, out_c, -1)
        gw = np.einsum("nop,nkp->ok", g, self.cols).reshape(self.w.shape)
        gb = g.sum(axis=(0, 2))
        gcols = np.einsum("ok,nop->nkp", self.w.reshape(out_c, -1), g)
        gx = np.zeros((n,) + self.padded_shape, dtype=grad.dtype)
        np.add.at(gx, (slice(None), k, i, j), gcols)
        if padding:
            gx = gx[:, :, padding:-padding, padding:-padding]
        return gx, gw, gb


def matmul(a, b):
    a, b = tensor(a), tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ValueError(
            "matmul: shapes {} and {} are not aligned".format(
                a.shape, b.shape
            )
        )
    return MatMul.apply(a, b)


def add(a, b):
    return tensor(a) + b


def mul(a, b):
    return tensor(a) * b


def exp(x):
    return tensor(x).exp()


def tanh(x):
    return tensor(x).tanh()


def softmax(x, axis=-1):
    return tensor(x).softmax(axis)


def mean(x, axis=None, keepdims=False):
    return tensor(x).mean(axis, keepdims)


def sum(x, axis=None, keepdims=False):
    return tensor(x).sum(axis, keepdims)


def minimum(a, b):
    return Minimum.apply(tensor(a), tensor(b))


def concat(tensors, axis=-1):
    tensors = [tensor(t) for t in tensors]
    ndim = tensors[0].ndim
    axis = axis % ndim
    for t in tensors[1:]:
        rest = [s for d, s in enumerate(t.shape) if d != axis]
        first = [s for d, s in enumerate(tensors[0].shape) if d != axis]
        if t.ndim != ndim or rest != first:
            raise ValueError(
                "concat: shapes {} and {} differ off axis {}".format(
                    tensors[0].shape, t.shape, axis
                )
            )
    return Concat.apply(*tensors, axis=axis)


def conv2d(x, weight, bias, stride=1, padding=0):
    """
    2D cross-correlation of (N, C, H, W) inputs with (O, C, kh, kw) kernels
    """
    x, weight, bias = tensor(x), tensor(weight), tensor(bias)
    if x.ndim != 4 or weight.ndim != 4 or x.shape[1] != weight.shape[1]:
        raise ValueError(
            "conv2d: input {} does not match kernel {}".format(
                x.shape, weight.shape
            )
        )
    if bias.shape != (weight.shape[0],):
        raise ValueError(
            "conv2d: bias {} does not match kernel {}".format(
                bias.shape, weight.shape
            )
        )
    return Conv2d.apply(x, weight, bias, stride=stride, padding=padding)


def gru_cell(x, h, w_input, w_hidden, b_input, b_hidden):
    """
    One GRU step

    The packed weights hold the reset, update and candidate blocks along
    the last axis: ``w_input`` is (in, 3 * hidden) and ``w_hidden`` is
    (hidden, 3 * hidden).
    """
    x, h = tensor(x), tensor(h)
    size = h.shape[-1]
    if w_hidden.shape != (size, 3 * size) or x.shape[-1] != w_input.shape[0]:
        raise ValueError(
            "gru_cell: input {} and hidden {} do not match weights {} and "
            "{}".format(x.shape, h.shape, w_input.shape, w_hidden.shape)
        )
    gi = matmul(x, w_input) + b_input
    gh = matmul(h, w_hidden) + b_hidden
    r = (gi[..., :size] + gh[..., :size]).sigmoid()
    z = (gi[..., size : 2 * size] + gh[..., size : 2 * size]).sigmoid()
    n = (gi[..., 2 * size :] + r * gh[..., 2 * size :]).tanh()
    return (1.0 - z) * n + z * h


def scaled_dot_attention(query, key, value):
    """softmax(Q K^T / sqrt(d)) V over the last two axes"""
    query, key, value = tensor(query), tensor(key), tensor(value)
    if query.shape[-1] != key.shape[-1] or key.shape[-2] != value.shape[-2]:
        raise ValueError(
            "attention: query {}, key {} and value {} do not match".format(
                query.shape, key.shape, value.shape
            )
        )
    axes = tuple(range(key.ndim - 2)) + (key.ndim - 1, key.ndim - 2)
    scores = matmul(query, key.transpose(axes)) * (
        1.0 / np.sqrt(query.shape[-1])
    )
    return matmul(scores.softmax(-1), value)
