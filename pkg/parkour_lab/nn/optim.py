import numpy as np


def clip_grad_norm(params, max_norm):
    """
    Scale gradients in place so their global norm is at most max_norm

    Returns the norm before clipping; parameters without a gradient are
    skipped.
    """
    grads = [p.grad for p in params if p.grad is not None]
    if not grads:
        return 0.0
    total = float(np.sqrt(np.sum([np.sum(g * g) for g in grads])))
    if np.isfinite(total) and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for p in params:
            if p.grad is not None:
                p.grad = p.grad * scale
    return total


class Adam:
    """
    Adam optimizer over a fixed parameter list

    Attributes
    ----------
    params : list of Tensor
        Parameters updated in place
    lr : float
        Learning rate
    betas : tuple of float
        Decay rates of the first and second moment estimates
    eps : float
        Denominator floor
    steps : int
        Updates applied so far

    Methods
    -------
    step():
        Apply one update from the current gradients

    zero_grad():
        Clear the gradients of every parameter

    state_dict() / load_state_dict(state):
        Moment estimates and step count for exact resumption
    """

    def __init__(self, params, lr=3e-4, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        if len({id(p) for p in self.params}) != len(self.params):
            raise ValueError("Adam received the same parameter twice")
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.steps = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self.steps += 1
        b1, b2 = self.betas
        c1 = 1.0 - b1**self.steps
        c2 = 1.0 - b2**self.steps
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad.astype(p.data.dtype)
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g
            update = (self.m[i] / c1) / (np.sqrt(self.v[i] / c2) + self.eps)
            p.data = (p.data - self.lr * update).astype(p.data.dtype)

    def state_dict(self):
        state = {"steps": np.array(self.steps)}
        for i, (m, v) in enumerate(zip(self.m, self.v)):
            state["m.{}".format(i)] = m
            state["v.{}".format(i)] = v
        return state

    def load_state_dict(self, state):
        count = sum(1 for key in state if key.startswith("m."))
        if count != len(self.params):
            raise RuntimeError(
                "Optimizer state holds {} moments for {} parameters".format(
                    count, len(self.params)
                )
            )
        self.steps = int(state["steps"])
        for i, p in enumerate(self.params):
            self.m[i] = np.array(state["m.{}".format(i)], dtype=p.data.dtype)
            self.v[i] = np.array(state["v.{}".format(i)], dtype=p.data.dtype)
