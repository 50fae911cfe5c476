import numpy as np

from .tensor import Tensor, precision


def numerical_gradient(fn, arrays, index, eps=1e-6):
    """Central finite differences of a scalar fn with respect to one input"""
    base = [np.array(a, dtype=np.float64) for a in arrays]
    grad = np.zeros_like(base[index])
    flat = base[index].reshape(-1)
    out = grad.reshape(-1)
    for k in range(flat.size):
        keep = flat[k]
        flat[k] = keep + eps
        plus = fn(*[Tensor(a) for a in base]).item()
        flat[k] = keep - eps
        minus = fn(*[Tensor(a) for a in base]).item()
        flat[k] = keep
        out[k] = (plus - minus) / (2.0 * eps)
    return grad


def gradcheck(fn, arrays, eps=1e-6, seed=0):
    """
    Compare reverse-mode gradients with central finite differences

    Non-scalar outputs are reduced with a fixed random weighting so every
    output component contributes. Runs in 64-bit precision.

    Parameters
    ----------
    fn : callable
        Maps Tensors to a Tensor
    arrays : sequence of array_like
        Input values; gradients are checked for every input
    eps : float, optional
        Finite-difference step, by default 1e-6
    seed : int, optional
        Seed of the output weighting, by default 0

    Returns
    -------
    float
        Largest relative error ``|a - n| / (|a| + |n|)`` over the inputs,
        measured in the L2 norm
    """
    with precision(np.float64):
        probe = fn(*[Tensor(a) for a in arrays])
        weights = np.random.default_rng(seed).normal(size=probe.shape)

        def scalar(*inputs):
            return (fn(*inputs) * weights).sum()

        inputs = [Tensor(a, requires_grad=True) for a in arrays]
        scalar(*inputs).backward()
        worst = 0.0
        for i, t in enumerate(inputs):
            analytic = t.grad if t.grad is not None else np.zeros(t.shape)
            numeric = numerical_gradient(scalar, arrays, i, eps)
            scale = np.linalg.norm(analytic) + np.linalg.norm(numeric)
            if scale == 0.0:
                continue
            error = np.linalg.norm(analytic - numeric) / scale
            worst = max(worst, float(error))
        return worst


def check_module(module, fn, eps=1e-6, limit=None, seed=0):
    """
    Finite-difference check of a scalar loss against module parameters

    Parameters
    ----------
    module : Module
        Parameters to perturb (must hold float64 data)
    fn : callable
        Zero-argument closure returning the scalar loss Tensor
    limit : int, optional
        Check only this many randomly chosen entries per parameter
    seed : int, optional
        Source of the entry choice

    Returns
    -------
    float
        Largest relative error over the checked entries
    """
    rng = np.random.default_rng(seed)
    module.zero_grad()
    fn().backward()
    analytic, numeric = [], []
    for _, p in module.named_parameters():
        if p.data.dtype != np.float64:
            raise RuntimeError("Gradient checks need float64 parameters")
        flat = p.data.reshape(-1)
        grad = (
            p.grad.reshape(-1) if p.grad is not None else np.zeros(flat.size)
        )
        picks = np.arange(flat.size)
        if limit is not None and flat.size > limit:
            picks = rng.choice(flat.size, limit, replace=False)
        for k in picks:
            keep = flat[k]
            flat[k] = keep + eps
            plus = fn().item()
            flat[k] = keep - eps
            minus = fn().item()
            flat[k] = keep
            analytic.append(grad[k])
            numeric.append((plus - minus) / (2.0 * eps))
    analytic, numeric = np.array(analytic), np.array(numeric)
    scale = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)
