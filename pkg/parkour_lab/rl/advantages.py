import numpy as np


def gae(rewards, values, dones, last_values, gamma=0.99, lam=0.95):
    """
    Generalized advantage estimation for one critic

    Parameters
    ----------
    rewards : array_like
        (T, ...) rewards of the critic's group
    values : array_like
        (T, ...) value predictions of the visited states
    dones : array_like
        (T, ...) flags; a done step does not bootstrap from the next state
    last_values : array_like
        (...) values of the states after the last step
    gamma : float, optional
        Discount, by default 0.99
    lam : float, optional
        Trace decay, by default 0.95

    Returns
    -------
    tuple of numpy.ndarray
        Advantages and value targets (advantages + values), both (T, ...)
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    last_values = np.asarray(last_values, dtype=np.float64)
    if rewards.shape != values.shape or rewards.shape != dones.shape:
        raise ValueError(
            "Rewards {}, values {} and dones {} must share a shape".format(
                rewards.shape, values.shape, dones.shape
            )
        )
    if last_values.shape != rewards.shape[1:]:
        raise ValueError(
            "Bootstrap values {} do not match a step of shape {}".format(
                last_values.shape, rewards.shape[1:]
            )
        )

    advantages = np.zeros_like(rewards)
    running = np.zeros_like(last_values)
    next_values = last_values
    for t in reversed(range(len(rewards))):
        live = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_values * live - values[t]
        running = delta + gamma * lam * live * running
        advantages[t] = running
        next_values = values[t]
    return advantages, advantages + values


def mix_advantages(advantages, weights, floor=1e-8):
    """
    Weighted sum of per-group advantages, normalized over the batch

    Parameters
    ----------
    advantages : sequence of array_like
        One advantage array per group, all of the same shape
    weights : sequence of float
        Group weights
    floor : float, optional
        Lower bound of the batch standard deviation, by default 1e-8

    Returns
    -------
    numpy.ndarray
        Zero-mean, unit-deviation mixed advantage
    """
    advantages = [np.asarray(a, dtype=np.float64) for a in advantages]
    if len(advantages) != len(weights):
        raise ValueError(
            "{} advantage arrays for {} weights".format(
                len(advantages), len(weights)
            )
        )
    shapes = {a.shape for a in advantages}
    if len(shapes) != 1:
        raise ValueError(
            "Advantage shapes differ: {}".format(sorted(shapes))
        )
    if advantages[0].size < 2:
        raise ValueError("Advantage mixing needs at least two samples")
    mixed = sum(w * a for w, a in zip(weights, advantages))
    return (mixed - mixed.mean()) / max(float(mixed.std()), floor)
