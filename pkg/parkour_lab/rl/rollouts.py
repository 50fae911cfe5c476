import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..nn import REWARD_GROUPS, no_grad
from .pas import pas_select
from .rewards import RewardConfig

THREADS_VARIABLE = "PUMA_LAB_THREADS"


def resolve_threads(requested=0):
    """
    Worker threads for environment stepping

    Parameters
    ----------
    requested : int, optional
        Desired count, 0 for one per CPU, by default 0

    Returns
    -------
    int
        The count capped by the PUMA_LAB_THREADS environment variable
    """
    count = requested if requested > 0 else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_VARIABLE)
    if cap:
        try:
            cap = int(cap)
        except ValueError:
            cap = 0
        if cap < 1:
            raise ValueError(
                "{} must be a positive integer, got '{}'".format(
                    THREADS_VARIABLE, os.environ[THREADS_VARIABLE]
                )
            )
        count = min(count, cap)
    return max(1, count)


class EnvPool:
    """
    Applies a function to every environment, in a thread pool when
    more than one thread is allowed

    Results keep the environment order, so the outcome does not depend
    on the thread count.
    """

    def __init__(self, envs, threads=1):
        self.envs = list(envs)
        self.threads = max(1, int(threads))
        self.executor = (
            ThreadPoolExecutor(self.threads) if self.threads > 1 else None
        )

    def __len__(self):
        return len(self.envs)

    def map(self, fn, *iterables):
        if self.executor is None:
            return list(map(fn, self.envs, *iterables))
        return list(self.executor.map(fn, self.envs, *iterables))

    def close(self):
        if self.executor is not None:
            self.executor.shutdown()
            self.executor = None


@dataclass
class EpisodeRecord:
    """Summary of one finished episode"""

    env: int
    outcome: str
    progress: float
    steps: int
    level: int


@dataclass
class RolloutBatch:
    """
    Trajectories of every environment over one horizon

    Every array is (T, N, ...) with T the horizon and N the environment
    count; ``values`` and ``last_values`` hold one entry per critic.

    Attributes
    ----------
    obs, history, depth : numpy.ndarray
        Actor and estimator inputs
    privileged, heights, critic_prior : numpy.ndarray
        Critic inputs
    prior_target, velocity : numpy.ndarray
        Estimator regression targets
    prior_input, velocity_input, latent_input : numpy.ndarray
        Detached policy inputs exactly as used during the rollout
    used_estimate : numpy.ndarray
        PAS flag, True where the actor received the estimated prior
    actions, log_probs : numpy.ndarray
        Sampled actions and their log-probabilities
    rewards : numpy.ndarray
        (T, N, 3) task, foothold and style rewards
    dones : numpy.ndarray
        Episode ends; the following state is not bootstrapped
    values : dict
        (T, N) value predictions per critic
    last_values : dict
        (N,) values of the states after the horizon per critic
    episodes : list of EpisodeRecord
        Episodes that ended during the horizon
    probability : float
        PAS probability used for the horizon
    """

    obs: np.ndarray
    history: np.ndarray
    depth: np.ndarray
    privileged: np.ndarray
    heights: np.ndarray
    critic_prior: np.ndarray
    prior_target: np.ndarray
    velocity: np.ndarray
    prior_input: np.ndarray
    velocity_input: np.ndarray
    latent_input: np.ndarray
    used_estimate: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    values: dict
    last_values: dict
    episodes: list = field(default_factory=list)
    probability: float = 0.0

    # Arrays indexed per sample by the update
    SAMPLE_FIELDS = (
        "obs",
        "history",
        "depth",
        "privileged",
        "heights",
        "critic_prior",
        "prior_target",
        "velocity",
        "prior_input",
        "velocity_input",
        "latent_input",
        "actions",
        "log_probs",
    )

    def __post_init__(self):
        shape = self.rewards.shape[:2]
        for name in self.SAMPLE_FIELDS + ("dones", "used_estimate"):
            if getattr(self, name).shape[:2] != shape:
                raise ValueError(
                    "Batch field '{}' has shape {}, expected leading "
                    "{}".format(name, getattr(self, name).shape, shape)
                )

    @property
    def horizon(self):
        return self.rewards.shape[0]

    @property
    def n_envs(self):
        return self.rewards.shape[1]

    @property
    def size(self):
        return self.horizon * self.n_envs

    def flat(self, name):
        """A per-sample field flattened to (T * N, ...)"""
        values = getattr(self, name)
        return values.reshape((self.size,) + values.shape[2:])

    def group_rewards(self, groups, config=None):
        """
        Rewards of each critic

        The three reward groups map to themselves; any other critic
        name receives the group-weighted scalar sum.
        """
        config = config or RewardConfig()
        out = {}
        for group in groups:
            if group in REWARD_GROUPS:
                out[group] = self.rewards[..., REWARD_GROUPS.index(group)]
            else:
                out[group] = self.rewards @ np.asarray(config.group_weights)
        return out


def _stack(observations, name):
    return np.stack([getattr(o, name) for o in observations])


def act(agent, variant, observations, schedule, rng, deterministic=False):
    """
    Estimator and policy pass over a list of observations

    Returns
    -------
    dict
        Actions, log-probabilities, estimator outputs, the prior fed to the
        actor and the PAS flags
    """
    history = _stack(observations, "history")
    depth = _stack(observations, "depth")
    obs = _stack(observations, "obs")
    n = len(observations)
    with no_grad():
        prior_hat, velocity_hat, latent = agent.estimator(history, depth)
        prior_hat = prior_hat.data
        if variant.implicit:
            prior_input, flags = prior_hat, np.ones(n, dtype=bool)
        elif variant.actor_prior:
            truth = _stack(observations, "prior_target")
            prior_input, flags = pas_select(truth, prior_hat, schedule, rng)
        else:
            prior_input = np.zeros((n, 0))
            flags = np.zeros(n, dtype=bool)
        mean = agent.policy(obs, prior_input, velocity_hat, latent)
        actions = agent.policy.sample(mean, rng, deterministic)
        log_probs = agent.policy.log_prob(mean, actions).data
    return {
        "actions": actions,
        "log_probs": log_probs,
        "prior_hat": prior_hat,
        "prior_input": np.asarray(prior_input, dtype=prior_hat.dtype),
        "velocity_input": velocity_hat.data,
        "latent_input": latent.data,
        "used_estimate": flags,
    }


class RolloutCollector:
    """
    Runs the policy in a set of environments

    Attributes
    ----------
    agent : Agent
        Networks acting in the environments
    pool : EnvPool
        Environments and their worker threads
    variant : Variant
        Decides which prior the actor receives
    observations : list of EnvObservation
        Current observation of every environment

    Methods
    -------
    collect(horizon, schedule, rng, curriculum=None):
        Step every environment ``horizon`` times and return a RolloutBatch
    """

    def __init__(self, agent, envs, variant, threads=1, levels=None):
        self.agent = agent
        self.variant = variant
        self.pool = EnvPool(envs, threads)
        if levels is None:
            levels = [env.level for env in self.pool.envs]
        self.observations = self.pool.map(
            lambda env, level: env.reset(int(level)), levels
        )

    @property
    def envs(self):
        return self.pool.envs

    def act(self, observations, schedule, rng, deterministic=False):
        return act(
            self.agent,
            self.variant,
            observations,
            schedule,
            rng,
            deterministic,
        )

    def values(self, observations):
        with no_grad():
            privileged = _stack(observations, "privileged")
            heights = _stack(observations, "heights")
            prior = _stack(observations, "critic_prior")
            return {
                group: critic(privileged, heights, prior).data
                for group, critic in self.agent.critics.items()
            }

    def collect(self, horizon, schedule, rng, curriculum=None):
        steps = {name: [] for name in RolloutBatch.SAMPLE_FIELDS}
        steps.update(used_estimate=[], rewards=[], dones=[])
        values = {group: [] for group in self.agent.critics}
        episodes = []

        for _ in range(horizon):
            current = self.observations
            decision = self.act(current, schedule, rng)
            for name in (
                "obs",
                "history",
                "depth",
                "privileged",
                "heights",
                "critic_prior",
                "prior_target",
                "velocity",
            ):
                steps[name].append(_stack(current, name))
            for name in (
                "prior_input",
                "velocity_input",
                "latent_input",
                "actions",
                "log_probs",
                "used_estimate",
            ):
                steps[name].append(decision[name])
            for group, v in self.values(current).items():
                values[group].append(v)

            results = self.pool.map(
                lambda env, action: env.step(action), decision["actions"]
            )
            rewards, dones, nxt = [], [], []
            for env, (observation, result) in zip(self.envs, results):
                rewards.append(result.rewards.as_array())
                dones.append(result.done)
                if result.done:
                    level = env.level
                    episodes.append(
                        EpisodeRecord(
                            env.index,
                            result.outcome.value,
                            result.progress,
                            result.steps,
                            level,
                        )
                    )
                    if curriculum is not None:
                        level = curriculum.step(env.index, result.outcome)
                    observation = env.reset(level)
                nxt.append(observation)
            steps["rewards"].append(np.array(rewards))
            steps["dones"].append(np.array(dones))
            self.observations = nxt

        arrays = {name: np.stack(v) for name, v in steps.items()}
        return RolloutBatch(
            values={g: np.stack(v) for g, v in values.items()},
            last_values=self.values(self.observations),
            episodes=episodes,
            probability=schedule.probability(),
            **arrays,
        )

    def close(self):
        self.pool.close()
