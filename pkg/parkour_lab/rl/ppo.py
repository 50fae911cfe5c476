import warnings
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from ..nn import REWARD_GROUPS, clip_grad_norm, minimum, tensor
from .advantages import gae, mix_advantages


@dataclass(frozen=True)
class PPOConfig:
    """
    Optimization hyperparameters

    Attributes
    ----------
    gamma, lam : float
        Discount and GAE trace decay
    clip : float
        Probability ratio clip range epsilon
    entropy_coef : float
        Weight of the entropy bonus
    learning_rate : float
        Adam step size shared by every network
    epochs, minibatches : int
        Passes over the batch and minibatches per pass
    horizon : int
        Control steps collected per environment and iteration
    value_coef : float
        Weight of each critic's TD loss
    estimator_coef : float
        Weight of the prior and velocity regression losses
    reconstruction_coef : float
        Weight of the height reconstruction loss on the latent
    max_grad_norm : float
        Global gradient norm clip
    """

    gamma: float = 0.99
    lam: float = 0.95
    clip: float = 0.2
    entropy_coef: float = 0.005
    learning_rate: float = 3e-4
    epochs: int = 4
    minibatches: int = 4
    horizon: int = 24
    value_coef: float = 1.0
    estimator_coef: float = 1.0
    reconstruction_coef: float = 1.0
    max_grad_norm: float = 1.0

    def __post_init__(self):
        if self.epochs < 1 or self.minibatches < 1 or self.horizon < 1:
            raise ValueError(
                "epochs, minibatches and horizon must be positive, got {}, "
                "{} and {}".format(self.epochs, self.minibatches, self.horizon)
            )
        if not 0.0 < self.clip < 1.0:
            raise ValueError(
                "clip must lie in (0, 1), got {}".format(self.clip)
            )


def clipped_surrogate(log_probs, old_log_probs, advantages, clip):
    """
    Negative clipped surrogate objective

    Uses ``min(r A, clip(r, 1 - eps, 1 + eps) A)`` with the ratio
    ``r = exp(log_probs - old_log_probs)``; where both terms tie the
    unclipped one carries the gradient.

    Returns
    -------
    Tensor
        Scalar loss, the negated batch mean
    """
    ratio = (log_probs - tensor(old_log_probs)).exp()
    advantages = tensor(advantages)
    unclipped = ratio * advantages
    clipped = ratio.clip(1.0 - clip, 1.0 + clip) * advantages
    return -minimum(unclipped, clipped).mean()


def mse(prediction, target):
    error = prediction - tensor(target)
    return (error * error).mean()


def estimator_losses(agent, history, depth, prior_target, velocity, heights):
    """
    Supervised estimator losses

    Returns
    -------
    dict of Tensor
        ``prior`` (through the prior decoder when the agent has one),
        ``velocity`` and ``reconstruction`` of the heights from the latent
    """
    prior_hat, velocity_hat, latent = agent.estimator(history, depth)
    if agent.prior_decoder is not None:
        prior_hat = agent.prior_decoder(prior_hat)
    return {
        "prior": mse(prior_hat, prior_target),
        "velocity": mse(velocity_hat, velocity),
        "reconstruction": mse(agent.decoder(latent), heights),
    }


def compute_advantages(batch, groups, reward_config, config):
    """
    Per-critic GAE and the mixed policy advantage

    Each critic runs GAE on the rewards of its own group. The group
    advantages are mixed with the reward group weights; a critic that
    is not a reward group already sees the weighted sum and gets
    weight 1.

    Returns
    -------
    tuple
        (T, N) normalized advantage and a dict of (T, N) value targets
    """
    rewards = batch.group_rewards(groups, reward_config)
    per_group, returns, weights = [], {}, []
    for group in groups:
        advantage, returns[group] = gae(
            rewards[group],
            batch.values[group],
            batch.dones,
            batch.last_values[group],
            config.gamma,
            config.lam,
        )
        per_group.append(advantage)
        weights.append(
            reward_config.group_weight(group)
            if group in REWARD_GROUPS
            else 1.0
        )
    return mix_advantages(per_group, weights), returns


def batch_losses(agent, batch, index, advantages, returns, config):
    """Summed training loss and its parts over the samples ``index``"""

    def take(name):
        return batch.flat(name)[index]

    policy = agent.policy
    mean = policy(
        take("obs"),
        take("prior_input"),
        take("velocity_input"),
        take("latent_input"),
    )
    log_probs = policy.log_prob(mean, take("actions"))
    losses = {
        "policy": clipped_surrogate(
            log_probs, take("log_probs"), advantages[index], config.clip
        ),
        "entropy": policy.entropy(),
    }
    privileged, heights = take("privileged"), take("heights")
    critic_prior = take("critic_prior")
    for group, critic in agent.critics.items():
        value = critic(privileged, heights, critic_prior)
        losses["critic_" + group] = mse(value, returns[group][index])
    losses.update(
        estimator_losses(
            agent,
            take("history"),
            take("depth"),
            take("prior_target"),
            take("velocity"),
            heights,
        )
    )
    total = (
        losses["policy"]
        - config.entropy_coef * losses["entropy"]
        + config.estimator_coef * (losses["prior"] + losses["velocity"])
        + config.reconstruction_coef * losses["reconstruction"]
    )
    for group in agent.critics:
        total = total + config.value_coef * losses["critic_" + group]
    return total, losses


def ppo_update(agent, optimizer, batch, advantages, returns, config, rng):
    """
    One optimization pass over a rollout batch

    Actor, critics and estimator are updated together from one summed
    loss. A non-finite loss or gradient aborts the whole pass and
    restores the parameters and optimizer state from before it.

    Parameters
    ----------
    agent : Agent
        Networks to update
    optimizer : Adam
        Optimizer over every agent parameter
    batch : RolloutBatch
        Trajectories collected by the current policy
    advantages : numpy.ndarray
        (T, N) mixed, normalized advantages
    returns : dict
        (T, N) value targets per critic
    config : PPOConfig
        Hyperparameters
    rng : numpy.random.Generator
        Minibatch shuffling source

    Returns
    -------
    dict
        Mean of every loss over the minibatches, ``grad_norm`` and the
        ``aborted`` flag
    """
    advantages = np.asarray(advantages).reshape(-1)
    returns = {g: np.asarray(r).reshape(-1) for g, r in returns.items()}
    if advantages.size != batch.size:
        raise ValueError(
            "{} advantages for a batch of {} samples".format(
                advantages.size, batch.size
            )
        )
    params = agent.parameters()
    snapshot = agent.state_dict()
    optimizer_state = optimizer.state_dict()
    size = max(1, batch.size // config.minibatches)

    sums = defaultdict(list)
    for _ in range(config.epochs):
        order = rng.permutation(batch.size)
        for k in range(config.minibatches):
            index = order[k * size : (k + 1) * size]
            if index.size == 0:
                continue
            total, losses = batch_losses(
                agent, batch, index, advantages, returns, config
            )
            optimizer.zero_grad()
            norm = float("nan")
            if np.isfinite(total.item()):
                total.backward()
                norm = clip_grad_norm(params, config.max_grad_norm)
            if not np.isfinite(norm):
                agent.load_state_dict(snapshot)
                optimizer.load_state_dict(optimizer_state)
                optimizer.zero_grad()
                warnings.warn(
                    "PPO update aborted after a non-finite loss ({}) or "
                    "gradient norm ({}); parameters restored".format(
                        total.item(), norm
                    )
                )
                report = {name: float("nan") for name in losses}
                report.update(grad_norm=norm, aborted=True)
                return report
            optimizer.step()
            for name, value in losses.items():
                sums[name].append(value.item())
            sums["grad_norm"].append(norm)

    report = {name: float(np.mean(v)) for name, v in sums.items()}
    report["aborted"] = False
    return report
