import numpy as np

from .tensor import (
    Tensor,
    conv2d,
    gru_cell,
    matmul,
    scaled_dot_attention,
    tensor,
)

ACTIVATIONS = {
    "elu": Tensor.elu,
    "relu": Tensor.relu,
    "tanh": Tensor.tanh,
}


def parameter(values):
    return Tensor(values, requires_grad=True)


class Module:
    """
    Container of parameters and child modules

    Parameters and children are found through instance attributes, so the
    dotted names follow attribute assignment order and are deterministic.

    Methods
    -------
    named_parameters(prefix=""):
        (name, Tensor) pairs of this module and all children

    parameters():
        Parameter tensors in named order

    zero_grad():
        Clear every parameter gradient
    """

    def named_parameters(self, prefix=""):
        for name, value in vars(self).items():
            full = prefix + name
            if isinstance(value, Tensor) and value.requires_grad:
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(full + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(
                            "{}.{}.".format(full, i)
                        )
            elif isinstance(value, dict):
                for key, item in value.items():
                    if isinstance(item, Module):
                        yield from item.named_parameters(
                            "{}.{}.".format(full, key)
                        )

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def parameter_count(self):
        return int(np.sum([p.size for p in self.parameters()]))

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class Linear(Module):
    """Affine map ``x @ weight + bias`` with a (in, out) weight"""

    def __init__(self, n_in, n_out, rng, gain=1.0, zero=False):
        if zero:
            weight = np.zeros((n_in, n_out))
        else:
            # Scaled Glorot uniform
            limit = gain * np.sqrt(6.0 / (n_in + n_out))
            weight = rng.uniform(-limit, limit, (n_in, n_out))
        self.weight = parameter(weight)
        self.bias = parameter(np.zeros(n_out))

    @property
    def n_in(self):
        return self.weight.shape[0]

    def forward(self, x):
        x = tensor(x)
        if x.shape[-1] != self.n_in:
            raise ValueError(
                "Linear layer expects {} inputs, got shape {}".format(
                    self.n_in, x.shape
                )
            )
        return matmul(x, self.weight) + self.bias


class MLP(Module):
    """
    Multi-layer perceptron

    Parameters
    ----------
    sizes : sequence of int
        Input size, hidden sizes and output size
    rng : numpy.random.Generator
        Initialization source
    activation : str, optional
        Hidden activation, by default "elu"
    output_gain : float, optional
        Initialization gain of the last layer, by default 1.0
    zero_output : bool, optional
        Zero-initialize the last layer, by default False
    """

    def __init__(
        self, sizes, rng, activation="elu", output_gain=1.0, zero_output=False
    ):
        if activation not in ACTIVATIONS:
            raise ValueError(
                "Unknown activation '{}', expected one of {}".format(
                    activation, sorted(ACTIVATIONS)
                )
            )
        self.activation = activation
        last = len(sizes) - 2
        self.layers = [
            Linear(
                a,
                b,
                rng,
                gain=output_gain if i == last else 1.0,
                zero=zero_output and i == last,
            )
            for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:]))
        ]

    def forward(self, x):
        act = ACTIVATIONS[self.activation]
        for layer in self.layers[:-1]:
            x = act(layer(x))
        return self.layers[-1](x)


class Conv2d(Module):
    def __init__(self, n_in, n_out, kernel, rng, stride=1, padding=0):
        fan_in = n_in * kernel * kernel
        limit = np.sqrt(6.0 / (fan_in + n_out * kernel * kernel))
        self.weight = parameter(
            rng.uniform(-limit, limit, (n_out, n_in, kernel, kernel))
        )
        self.bias = parameter(np.zeros(n_out))
        self.stride = stride
        self.padding = padding

    def forward(self, x):
        return conv2d(x, self.weight, self.bias, self.stride, self.padding)


class GRUCell(Module):
    """Gated recurrent unit with packed reset, update and candidate gates"""

    def __init__(self, n_in, hidden, rng):
        limit = 1.0 / np.sqrt(hidden)
        self.w_input = parameter(
            rng.uniform(-limit, limit, (n_in, 3 * hidden))
        )
        self.w_hidden = parameter(
            rng.uniform(-limit, limit, (hidden, 3 * hidden))
        )
        self.b_input = parameter(np.zeros(3 * hidden))
        self.b_hidden = parameter(np.zeros(3 * hidden))
        self.hidden = hidden

    def forward(self, x, h):
        return gru_cell(
            x, h, self.w_input, self.w_hidden, self.b_input, self.b_hidden
        )

    def run(self, sequence):
        """
        Run over a (batch, time, features) sequence from a zero state

        Returns the final hidden state.
        """
        batch, steps = sequence.shape[:2]
        h = Tensor(np.zeros((batch, self.hidden)))
        for t in range(steps):
            h = self.forward(sequence[:, t, :], h)
        return h


class SelfAttention(Module):
    """Multi-head scaled dot-product self-attention with a residual path"""

    def __init__(self, dim, heads, rng):
        if dim % heads:
            raise ValueError(
                "Attention width {} is not divisible by {} heads".format(
                    dim, heads
                )
            )
        self.heads = heads
        self.query = Linear(dim, dim, rng)
        self.key = Linear(dim, dim, rng)
        self.value = Linear(dim, dim, rng)
        self.out = Linear(dim, dim, rng)

    def _split(self, x):
        batch, tokens, dim = x.shape
        x = x.reshape(batch, tokens, self.heads, dim // self.heads)
        return x.transpose(0, 2, 1, 3)

    def forward(self, x):
        """(batch, tokens, dim) -> (batch, tokens, dim)"""
        batch, tokens, dim = x.shape
        attended = scaled_dot_attention(
            self._split(self.query(x)),
            self._split(self.key(x)),
            self._split(self.value(x)),
        )
        merged = attended.transpose(0, 2, 1, 3).reshape(batch, tokens, dim)
        return x + self.out(merged)


def flatten(x):
    return x.reshape(x.shape[0], -1)

