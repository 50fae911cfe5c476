import json
import warnings
from collections import deque
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
from tqdm.auto import tqdm

from ..nn import (
    REWARD_GROUPS,
    Adam,
    Agent,
    precision,
    read_checkpoint,
    write_checkpoint,
)
from ..rl import (
    Curriculum,
    EpisodeRecord,
    ParkourEnv,
    PasSchedule,
    RolloutCollector,
    compute_advantages,
    get_variant,
    ppo_update,
    resolve_threads,
)
from ..sim import Outcome

METRICS_COLUMNS = (
    "iter",
    "p_t",
    "mean_reward_task",
    "mean_reward_foothold",
    "mean_reward_style",
    "loss_policy",
    "loss_critic_task",
    "loss_critic_foothold",
    "loss_critic_style",
    "loss_fhat_mse",
    "loss_vhat_mse",
    "mean_level",
    "sr_window",
    "tr_window",
)

# Episodes in the rolling success and traverse windows
WINDOW = 100

# Random stream of action sampling and minibatch shuffling; environments
# use the streams [seed, index]
TRAINER_STREAM = 2**31 - 1


def network_config(config):
    """NetworkConfig of a run, sized to its camera, history and variant"""
    camera = config.camera
    base = replace(
        config.network,
        depth_history=camera.history,
        depth_shape=(camera.height, camera.width),
    )
    return get_variant(config.run.variant).network_config(base)


def build_agent(config):
    variant = get_variant(config.run.variant)
    return Agent(
        network_config(config),
        config.run.seed,
        variant.prior_decoder_size(),
    )


def build_env(config, index, seed, level=0, episode=None):
    variant = get_variant(config.run.variant)
    return ParkourEnv(
        index=index,
        seed=seed,
        level=level,
        lane=config.lane,
        terrain=config.terrain,
        foothold=config.foothold,
        body=config.body,
        contact=config.contact,
        episode=episode or config.episode,
        camera=config.camera,
        noise=config.noise,
        reward=config.reward,
        prior_kind=variant.prior_kind,
        history_length=config.network.proprio_history,
    )


def load_agent(checkpoint, config):
    """
    Build the agent of a config and load a PUMA1 checkpoint into it

    Raises
    ------
    RuntimeError
        A tensor is missing, unknown or has another shape
    """
    agent = build_agent(config)
    agent.load_state_dict(read_checkpoint(checkpoint))
    return agent


def sidecar_path(checkpoint):
    checkpoint = Path(checkpoint)
    return checkpoint.with_name(checkpoint.stem + ".state.npz")


def window_rates(episodes):
    """Success rate and mean traverse of finished episodes, NaN if none"""
    if not episodes:
        return float("nan"), float("nan")
    finished = [e.outcome == Outcome.FINISHED.value for e in episodes]
    return (
        float(np.mean(finished)),
        float(np.mean([e.progress for e in episodes])),
    )


class Trainer:
    """
    Concurrent training of the actor, the critics and the estimator

    Attributes
    ----------
    config : RunConfig
        Settings of the run
    agent : Agent
        Networks being trained
    optimizer : Adam
        Optimizer over every network parameter
    collector : RolloutCollector
        Environments and rollout logic
    curriculum : Curriculum
        Per-environment terrain levels
    schedule : PasSchedule
        Probability of feeding the estimated prior
    iteration : int
        Completed iterations
    metrics : list of dict
        One row per completed iteration

    Methods
    -------
    step():
        Collect one horizon, update every network and return the metrics row

    train(iterations=None):
        Iterate up to ``iterations`` (the configured count by default),
        streaming metrics and writing checkpoints

    save_checkpoint(path=None) / load_checkpoint(path):
        PUMA1 parameters plus the ``.state.npz`` resume sidecar
    """

    def __init__(self, config, verbose=True):
        self.config = config
        self.verbose = verbose
        run = config.run
        self.variant = get_variant(run.variant)
        self.dtype = np.float64 if run.float64 else np.float32
        self.out = Path(run.out)
        self.metrics_path = self.out / "metrics.csv"
        self.checkpoint_dir = self.out / "checkpoints"

        with precision(self.dtype):
            self.agent = build_agent(config)
        self.optimizer = Adam(
            self.agent.parameters(), lr=config.ppo.learning_rate
        )
        self.curriculum = Curriculum(run.n_envs, config.curriculum)
        pas = config.pas
        if self.variant.fixed_probability is not None:
            pas = replace(
                pas, fixed_probability=self.variant.fixed_probability
            )
        self.schedule = PasSchedule.from_config(pas, run.iterations)
        self.rng = np.random.default_rng([run.seed, TRAINER_STREAM])
        self.threads = 1 if run.deterministic else resolve_threads(run.threads)

        envs = [
            build_env(config, i, run.seed, config.curriculum.initial_level)
            for i in range(run.n_envs)
        ]
        self.collector = RolloutCollector(
            self.agent,
            envs,
            self.variant,
            self.threads,
            levels=self.curriculum.levels,
        )
        self.episodes = deque(maxlen=WINDOW)
        self.iteration = 0
        self.metrics = []

    def __repr__(self):
        return "Trainer(variant={}, n_envs={}, iteration={})".format(
            self.variant.name, self.config.run.n_envs, self.iteration
        )

    def step(self):
        config = self.config
        curriculum = self.curriculum if config.curriculum.enabled else None
        with precision(self.dtype):
            batch = self.collector.collect(
                config.ppo.horizon, self.schedule, self.rng, curriculum
            )
            advantages, returns = compute_advantages(
                batch, self.variant.critic_groups, config.reward, config.ppo
            )
            report = ppo_update(
                self.agent,
                self.optimizer,
                batch,
                advantages,
                returns,
                config.ppo,
                self.rng,
            )
        self.episodes.extend(batch.episodes)
        self.schedule.advance()
        self.iteration += 1

        sr, tr = window_rates(self.episodes)
        rewards = batch.rewards.reshape(-1, len(REWARD_GROUPS)).mean(axis=0)
        row = {"iter": self.iteration, "p_t": batch.probability}
        for group, value in zip(REWARD_GROUPS, rewards):
            row["mean_reward_" + group] = float(value)
        row["loss_policy"] = report.get("policy", float("nan"))
        for group in REWARD_GROUPS:
            key = "critic_" + group
            row["loss_" + key] = report.get(key, float("nan"))
        row["loss_fhat_mse"] = report.get("prior", float("nan"))
        row["loss_vhat_mse"] = report.get("velocity", float("nan"))
        row["mean_level"] = self.curriculum.mean_level()
        row["sr_window"] = sr
        row["tr_window"] = tr
        self.metrics.append(row)
        return row

    def train(self, iterations=None):
        """
        Parameters
        ----------
        iterations : int, optional
            Total iteration count to reach, by default the configured one

        Returns
        -------
        pandas.DataFrame
            Metrics of every completed iteration
        """
        total = iterations
        if total is None:
            total = self.config.run.iterations
        every = self.config.run.checkpoint_every
        self._prepare_output()
        if self.verbose:
            print(
                "Training | {} variant, {} environments, {} thread(s), "
                "iterations {} to {}".format(
                    self.variant.name,
                    self.config.run.n_envs,
                    self.threads,
                    self.iteration + 1,
                    total,
                )
            )
        bar = tqdm(
            range(self.iteration, total),
            disable=not self.verbose,
            desc="Training",
        )
        for _ in bar:
            row = self.step()
            self._append_metrics(row)
            bar.set_postfix(
                level=row["mean_level"], task=row["mean_reward_task"]
            )
            if self.iteration % every == 0:
                self.save_checkpoint()
        if not self.metrics or self.iteration % every != 0:
            self.save_checkpoint()
        return pd.DataFrame(self.metrics, columns=METRICS_COLUMNS)

    def close(self):
        self.collector.close()

    # Persistence -----------------------------------------------------

    def _prepare_output(self):
        try:
            self.checkpoint_dir.mkdir(parents=True, exist_ok=True)
            self.config.save(self.out / "config.ini")
        except OSError as error:
            raise RuntimeError(
                "Could not create output directory '{}': {}".format(
                    self.out, error
                )
            ) from error

    def _append_metrics(self, row):
        frame = pd.DataFrame([row], columns=METRICS_COLUMNS)
        path = self.metrics_path
        try:
            frame.to_csv(
                path,
                mode="a",
                header=not path.exists(),
                index=False,
            )
        except OSError as error:
            raise RuntimeError(
                "Could not write metrics '{}': {}".format(path, error)
            ) from error

    def checkpoint_path(self, iteration=None):
        iteration = self.iteration if iteration is None else iteration
        return self.checkpoint_dir / "iter_{:06d}.puma".format(iteration)

    def state_dict(self):
        """Arrays of everything a bit-identical continuation needs"""
        state = {
            "iteration": np.array(self.iteration),
            "schedule_step": np.array(self.schedule.step),
            "rng": np.array(json.dumps(self.rng.bit_generator.state)),
        }
        for name, values in self.agent.state_dict().items():
            state["agent." + name] = values
        for name, values in self.optimizer.state_dict().items():
            state["optimizer." + name] = values
        for name, values in self.curriculum.state_dict().items():
            state["curriculum." + name] = values
        for env in self.collector.envs:
            for name, values in env.state_dict().items():
                state["env{}.{}".format(env.index, name)] = values
        episodes = list(self.episodes)
        state["episodes"] = np.array(
            [[e.env, e.progress, e.steps, e.level] for e in episodes]
        ).reshape(-1, 4)
        state["episode_outcomes"] = np.array(
            [e.outcome for e in episodes], dtype=str
        )
        return state

    def load_state_dict(self, state):
        def section(prefix):
            return {
                key[len(prefix) :]: state[key]
                for key in state
                if key.startswith(prefix)
            }

        self.agent.load_state_dict(section("agent."))
        self.optimizer.load_state_dict(section("optimizer."))
        self.curriculum.load_state_dict(section("curriculum."))
        for env in self.collector.envs:
            env.load_state_dict(section("env{}.".format(env.index)))
        self.collector.observations = [
            env.observation() for env in self.collector.envs
        ]
        self.iteration = int(state["iteration"])
        self.schedule.step = int(state["schedule_step"])
        self.rng.bit_generator.state = json.loads(str(state["rng"]))
        self.episodes.clear()
        for (env, progress, steps, level), outcome in zip(
            state["episodes"], state["episode_outcomes"]
        ):
            self.episodes.append(
                EpisodeRecord(
                    int(env),
                    str(outcome),
                    float(progress),
                    int(steps),
                    int(level),
                )
            )

    def save_checkpoint(self, path=None):
        """
        Write the PUMA1 parameter file and its resume sidecar

        Returns
        -------
        pathlib.Path
            Path of the PUMA1 file
        """
        path = Path(path) if path is not None else self.checkpoint_path()
        sidecar = sidecar_path(path)
        try:
            write_checkpoint(self.agent.state_dict(), path)
            np.savez(sidecar, **self.state_dict())
        except OSError as error:
            raise RuntimeError(
                "Could not write checkpoint '{}': {}".format(path, error)
            ) from error
        if self.verbose:
            tqdm.write(
                "Checkpoint | iteration {} written to {}".format(
                    self.iteration, path
                )
            )
        return path

    def load_checkpoint(self, path):
        """
        Resume from a checkpoint

        With its sidecar the run continues bit-identically; a bare PUMA1
        file only restores the parameters.
        """
        path = Path(path)
        if not path.exists():
            raise ValueError("Checkpoint '{}' does not exist".format(path))
        sidecar = sidecar_path(path)
        if not sidecar.exists():
            warnings.warn(
                "No resume state next to '{}'; loading parameters only".format(
                    path
                )
            )
            self.agent.load_state_dict(read_checkpoint(path))
            return self
        with np.load(sidecar, allow_pickle=False) as data:
            self.load_state_dict({key: data[key] for key in data.files})
        self._truncate_metrics()
        return self

    def _truncate_metrics(self):
        path = self.metrics_path
        if not path.exists():
            self.metrics = []
            return
        frame = pd.read_csv(path, float_precision="round_trip")
        frame = frame[frame["iter"] <= self.iteration]
        try:
            frame.to_csv(path, index=False)
        except OSError as error:
            raise RuntimeError(
                "Could not write metrics '{}': {}".format(path, error)
            ) from error
        self.metrics = frame.to_dict("records")


def latest_checkpoint(out):
    """Newest checkpoint of an output directory, None if there is none"""
    found = sorted(Path(out, "checkpoints").glob("iter_*.puma"))
    return found[-1] if found else None


def train(config, resume=None, verbose=True):
    """
    Run a full training

    Parameters
    ----------
    config : RunConfig
        Settings of the run
    resume : str or pathlib.Path, optional
        Checkpoint to continue from
    verbose : bool, optional
        Print progress, by default True

    Returns
    -------
    Trainer
        The trainer after its last iteration
    """
    trainer = Trainer(config, verbose=verbose)
    try:
        if resume is not None:
            trainer.load_checkpoint(resume)
        trainer.train()
    finally:
        trainer.close()
    return trainer

