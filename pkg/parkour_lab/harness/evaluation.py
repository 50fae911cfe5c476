from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd
from tqdm.auto import tqdm

from ..nn import REWARD_GROUPS, no_grad
from ..rl import EnvPool, EpisodeRecord, PasSchedule, act, get_variant
from ..sim import Outcome, TrajectoryRecorder
from ..terrain import preset_spec
from .config import config_digest
from .training import build_env

# Commanded velocity of every evaluation episode
EVAL_COMMAND = (1.5, 0.0, 0.0)


@dataclass
class EvalReport:
    """
    Evaluation of one checkpoint on one terrain preset

    Attributes
    ----------
    preset : str
        Terrain preset name
    trials : int
        Episodes run
    success_rate : float
        Fraction of episodes that crossed the finish line
    traverse_rate : float
        Mean furthest base x over the lane length (1.0 for a finish)
    mse : float
        Foothold prior regression MSE over every step
    mse_normalized : float
        The same, each component divided by its target variance
    mean_length : float
        Mean episode length in control steps
    reward_task, reward_foothold, reward_style : float
        Mean per-step group rewards
    config_digest : str
        SHA-256 of the run config
    checkpoint : str
        Checkpoint the agent was loaded from
    """

    preset: str
    trials: int
    success_rate: float
    traverse_rate: float
    mse: float
    mse_normalized: float
    mean_length: float
    reward_task: float = float("nan")
    reward_foothold: float = float("nan")
    reward_style: float = float("nan")
    config_digest: str = ""
    checkpoint: str = ""

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(
                "A report needs at least one trial, got {}".format(
                    self.trials
                )
            )
        for name in ("success_rate", "traverse_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(
                    "{} must lie in [0, 1], got {}".format(name, value)
                )

    def __str__(self):
        return (
            "{}: SR {:.3f}, TR {:.3f}, MSE {:.4f} ({:.3f} normalized), "
            "{} trials".format(
                self.preset,
                self.success_rate,
                self.traverse_rate,
                self.mse,
                self.mse_normalized,
                self.trials,
            )
        )


def regression_errors(predictions, targets):
    """
    Raw and variance-normalized mean squared error

    Components whose target never varies are left out of the normalized
    error, which is NaN when no component varies.
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ValueError(
            "Predictions {} and targets {} differ in shape".format(
                predictions.shape, targets.shape
            )
        )
    if targets.size == 0:
        return float("nan"), float("nan")
    squared = (predictions - targets) ** 2
    mse = float(squared.mean())
    per_component = squared.reshape(-1, targets.shape[-1]).mean(axis=0)
    variance = targets.reshape(-1, targets.shape[-1]).var(axis=0)
    varying = variance > 1e-12
    if not varying.any():
        return mse, float("nan")
    return mse, float(np.mean(per_component[varying] / variance[varying]))


def summarize(
    preset,
    episodes,
    predictions=(),
    targets=(),
    rewards=None,
    digest="",
    checkpoint="",
):
    """
    Aggregate finished episodes into an EvalReport

    Parameters
    ----------
    preset : str
        Terrain preset name
    episodes : list of EpisodeRecord
        One record per trial
    predictions, targets : array_like, optional
        Estimated and ground-truth priors of every evaluated step
    rewards : array_like, optional
        (steps, 3) group rewards of every evaluated step

    Returns
    -------
    EvalReport
    """
    if not episodes:
        raise ValueError("Cannot summarize an evaluation without episodes")
    mse, normalized = regression_errors(predictions, targets)
    finished = [e.outcome == Outcome.FINISHED.value for e in episodes]
    means = [float("nan")] * len(REWARD_GROUPS)
    if rewards is not None and len(rewards):
        means = np.asarray(rewards, dtype=np.float64).mean(axis=0)
    return EvalReport(
        preset=preset,
        trials=len(episodes),
        success_rate=float(np.mean(finished)),
        traverse_rate=float(np.mean([e.progress for e in episodes])),
        mse=mse,
        mse_normalized=normalized,
        mean_length=float(np.mean([e.steps for e in episodes])),
        reward_task=float(means[0]),
        reward_foothold=float(means[1]),
        reward_style=float(means[2]),
        config_digest=digest,
        checkpoint=str(checkpoint),
    )


def _estimated_prior(agent, decision):
    if agent.prior_decoder is None:
        return decision["prior_hat"]
    with no_grad():
        return agent.prior_decoder(decision["prior_hat"]).data


def evaluate(
    agent,
    config,
    preset,
    trials=None,
    seed=0,
    batch_size=16,
    threads=1,
    dump_traj=None,
    checkpoint="",
    verbose=False,
):
    """
    Run evaluation episodes of a trained agent on a terrain preset

    Every trial gets its own terrain seed and runs at 1.5 m/s with the
    deterministic (mean) action; the actor receives the estimated prior.

    Parameters
    ----------
    agent : Agent
        Trained networks
    config : RunConfig
        Config the agent was trained with
    preset : str
        Terrain preset name (see terrain.PRESETS)
    trials : int, optional
        Episodes to run, by default ``config.run.eval_trials``
    seed : int, optional
        Seed of the terrains and the episode randomness, by default 0
    batch_size : int, optional
        Episodes stepped together, by default 16
    threads : int, optional
        Worker threads stepping the episodes, by default 1
    dump_traj : str or pathlib.Path, optional
        Directory receiving one trajectory file per trial
    checkpoint : str, optional
        Checkpoint name stored in the report
    verbose : bool, optional
        Show a progress bar, by default False

    Returns
    -------
    EvalReport
        Same agent, config, preset and seed give the same report
    """
    trials = config.run.eval_trials if trials is None else trials
    if trials < 1:
        raise ValueError("trials must be positive, got {}".format(trials))
    variant = get_variant(config.run.variant)
    episode = replace(config.episode, command=EVAL_COMMAND)
    lane = config.lane
    if dump_traj is not None:
        dump_traj = Path(dump_traj)
        dump_traj.mkdir(parents=True, exist_ok=True)

    records, predictions, targets, rewards = [], [], [], []
    schedule = PasSchedule(0)
    rng = np.random.default_rng([seed, trials])
    bar = tqdm(total=trials, disable=not verbose, desc=preset)
    for start in range(0, trials, batch_size):
        indices = range(start, min(trials, start + batch_size))
        envs = [build_env(config, i, seed, episode=episode) for i in indices]
        specs = [
            preset_spec(
                preset,
                seed + i,
                config.terrain,
                lane.lane_length,
                lane.lane_width,
            )
            for i in indices
        ]
        if dump_traj is not None:
            for env in envs:
                env.recorder = TrajectoryRecorder()
        pool = EnvPool(envs, threads)
        observations = pool.map(lambda env, spec: env.reset(spec=spec), specs)
        while any(o is not None for o in observations):
            active = [k for k, o in enumerate(observations) if o is not None]
            current = [observations[k] for k in active]
            decision = act(
                agent, variant, current, schedule, rng, deterministic=True
            )
            predictions.append(_estimated_prior(agent, decision))
            targets.append(np.stack([o.prior_target for o in current]))
            actions = [None] * len(envs)
            for row, k in enumerate(active):
                actions[k] = decision["actions"][row]
            results = pool.map(_advance, actions)
            for k in active:
                observation, result = results[k]
                observations[k] = observation
                rewards.append(result.rewards.as_array())
                if result.done:
                    records.append(
                        EpisodeRecord(
                            envs[k].index,
                            result.outcome.value,
                            result.progress,
                            result.steps,
                            envs[k].spec.level,
                        )
                    )
                    bar.update(1)
        pool.close()
        if dump_traj is not None:
            for env in envs:
                env.recorder.write(
                    dump_traj / "{}_{:04d}.csv".format(preset, env.index)
                )
    bar.close()

    records.sort(key=lambda r: r.env)
    return summarize(
        preset,
        records,
        np.concatenate(predictions),
        np.concatenate(targets),
        rewards,
        digest=config_digest(config),
        checkpoint=checkpoint,
    )


def _advance(env, action):
    if action is None:
        return None, None
    return env.step(action)


def reports_frame(reports):
    """Tidy table of reports, one row per report"""
    return pd.DataFrame([asdict(r) for r in reports])
