import json
from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..foothold import FootholdConfig, advance_cursor, build_track
from ..foothold import polar_prior
from ..sensors import (
    CameraConfig,
    CameraPose,
    DepthImage,
    DepthPipeline,
    NoiseConfig,
    ProprioHistory,
    assemble_observation,
    prior_features,
    privileged_observation,
    render_depth,
)
from ..sim import (
    BodyConfig,
    ContactConfig,
    EpisodeConfig,
    Outcome,
    RobotState,
    check_termination,
    reset,
    step,
)
from ..terrain import TerrainConfig, TerrainSpec, edge_distance, generate
from .rewards import RewardConfig, RewardGroups, Transition, compute_rewards


@dataclass(frozen=True)
class LaneConfig:
    """
    Training lane selection

    Attributes
    ----------
    families : tuple of str
        Terrain families drawn uniformly at every reset
    lane_length, lane_width : float
        Lane size in meters
    terrain_variants : int
        Distinct terrain seeds per family and level
    render_depth : bool
        Raycast depth frames; zero frames are used when False
    """

    families: tuple = ("SteppingStones", "WallAssistedGap", "Surmounting")
    lane_length: float = 20.0
    lane_width: float = 4.0
    terrain_variants: int = 4
    render_depth: bool = True

    def __post_init__(self):
        if not self.families:
            raise ValueError("A lane configuration needs a terrain family")
        if self.terrain_variants < 1:
            raise ValueError(
                "terrain_variants must be at least 1, got {}".format(
                    self.terrain_variants
                )
            )


@lru_cache(maxsize=256)
def load_lane(spec, terrain=None, foothold=None):
    """
    Generate a lane with its edge distances and foothold track

    Results are cached per (spec, configs) and shared between
    environments; callers must copy the track before moving its cursor.
    """
    terrain = terrain or TerrainConfig()
    hf = generate(spec, terrain)
    edf = edge_distance(hf, terrain.h_edge)
    return hf, edf, build_track(hf, edf, spec, config=foothold)


@dataclass
class EnvObservation:
    """
    Everything the networks read at one control step

    Attributes
    ----------
    obs : numpy.ndarray
        Noisy proprioceptive observation o_t
    history : numpy.ndarray
        (H1, 45) observation window, oldest first
    depth : numpy.ndarray
        (H2, height, width) normalized depth stack, newest first
    privileged : numpy.ndarray
        Critic state s_t
    heights : numpy.ndarray
        Local height samples H_t
    critic_prior : numpy.ndarray
        Ground-truth polar prior for the critics
    prior_target : numpy.ndarray
        Ground-truth prior in the encoding the estimator is trained on
    velocity : numpy.ndarray
        Ground-truth base velocity in the base frame
    """

    obs: np.ndarray
    history: np.ndarray
    depth: np.ndarray
    privileged: np.ndarray
    heights: np.ndarray
    critic_prior: np.ndarray
    prior_target: np.ndarray
    velocity: np.ndarray


@dataclass
class StepResult:
    """Reward, status and lane progress after one control step"""

    rewards: RewardGroups
    outcome: Outcome
    progress: float
    arrived: bool
    steps: int

    @property
    def done(self):
        return self.outcome.done


class ParkourEnv:
    """
    One robot on one terrain lane

    Attributes
    ----------
    index : int
        Environment number, mixed into the random stream
    level : int
        Curriculum level used by the next curriculum reset
    spec : TerrainSpec
        Lane of the current episode
    state : RobotState
        Current robot state
    track : FootholdTrack
        Private copy of the lane's footholds
    progress : float
        Furthest base x reached as a fraction of the lane length, 1.0
        once the finish line is crossed
    recorder : TrajectoryRecorder or None
        Receives every state when set

    Methods
    -------
    reset(level=None, spec=None):
        Start an episode on a curriculum lane or on a given lane

    step(action):
        Advance one control step
    """

    def __init__(
        self,
        index=0,
        seed=0,
        level=0,
        lane=None,
        terrain=None,
        foothold=None,
        body=None,
        contact=None,
        episode=None,
        camera=None,
        noise=None,
        reward=None,
        prior_kind="polar",
        history_length=10,
    ):
        self.index = index
        self.level = level
        self.lane = lane or LaneConfig()
        self.terrain = terrain or TerrainConfig()
        self.foothold = foothold or FootholdConfig()
        self.body = body or BodyConfig()
        self.contact = contact or ContactConfig()
        self.episode = episode or EpisodeConfig()
        self.camera = camera or CameraConfig()
        self.noise = noise or NoiseConfig()
        self.reward = reward or RewardConfig()
        self.prior_kind = prior_kind
        self.command = np.asarray(self.episode.command, dtype=np.float64)
        self.rng = np.random.default_rng([seed, index])
        self.history = ProprioHistory(history_length)
        self.pipeline = DepthPipeline(self.camera)
        self.recorder = None
        self.spec = None
        self.state = None

    def __repr__(self):
        return "ParkourEnv(index={}, level={}, spec={})".format(
            self.index, self.level, self.spec
        )

    def curriculum_spec(self, level):
        families = self.lane.families
        family = families[int(self.rng.integers(len(families)))]
        return TerrainSpec(
            family,
            level,
            int(self.rng.integers(self.lane.terrain_variants)),
            lane_length=self.lane.lane_length,
            lane_width=self.lane.lane_width,
        )

    def _load(self, spec):
        self.spec = spec
        self.hf, self.edf, track = load_lane(
            spec, self.terrain, self.foothold
        )
        self.track = track.copy()

    def reset(self, level=None, spec=None):
        """
        Parameters
        ----------
        level : int, optional
            Curriculum level of the new lane, by default ``self.level``
        spec : TerrainSpec, optional
            Fixed lane (evaluation presets); overrides the curriculum draw

        Returns
        -------
        EnvObservation
            Observation of the first step
        """
        if spec is None:
            if level is not None:
                self.level = level
            spec = self.curriculum_spec(self.level)
        self._load(spec)
        self.state = reset(
            self.hf, self.track, self.rng, self.body, self.episode
        )
        self.step_count = 0
        self.progress = 0.0
        self.actions = [np.zeros(12), np.zeros(12)]

        obs = self._proprio()
        self.history.reset(obs)
        if self.lane.render_depth:
            self.pipeline.reset(self._render, rng=self.rng)
        if self.recorder is not None:
            self.recorder.record(0, 0.0, self.state, self.track.cursor)
        return self._observe(obs)

    def _proprio(self, noisy=True):
        return assemble_observation(
            self.state,
            self.command,
            self.actions[0],
            self.noise if noisy else None,
            self.rng,
        )

    def _render(self):
        pose = CameraPose.mounted(self.state, self.camera)
        return render_depth(self.hf, pose, self.camera)

    def _depth_stack(self):
        if not self.lane.render_depth:
            cfg = self.camera
            return np.zeros((cfg.history, cfg.height, cfg.width))
        return self.pipeline.stack()

    def _observe(self, obs):
        planar = self.foothold.planar_distance
        privileged = privileged_observation(
            self._proprio(noisy=False),
            self.state,
            self.track,
            self.hf,
            planar=planar,
        )
        return EnvObservation(
            obs=obs,
            history=self.history.array(),
            depth=self._depth_stack(),
            privileged=privileged.state,
            heights=privileged.heights,
            critic_prior=privileged.prior,
            prior_target=prior_features(
                self.state, self.track, self.prior_kind, planar
            ),
            velocity=self.state.body_velocity(),
        )

    def step(self, action):
        """
        Parameters
        ----------
        action : array_like
            12 normalized foot targets, clipped to [-1, 1]

        Returns
        -------
        tuple
            Next EnvObservation (None once the episode ended) and the
            StepResult of the step
        """
        if self.state is None:
            raise RuntimeError("Call reset() before step()")
        action = np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)
        ep = self.episode
        self.state, report = step(
            self.state,
            action,
            self.hf,
            self.body,
            self.contact,
            ep.sim_dt,
            ep.control_decimation,
        )
        self.step_count += 1
        outcome = check_termination(
            self.state, ep, self.hf, self.step_count, report
        )

        arrived = False
        if self.state.valid and self.state.is_finite():
            planar = self.foothold.planar_distance
            _, arrived = advance_cursor(
                self.state,
                self.track,
                self.foothold.eps,
                self.foothold.overfly,
                planar,
            )
            transition = Transition.from_step(
                self.state,
                report,
                polar_prior(self.state, self.track, planar).as_array(),
                self.command,
                (action, self.actions[0], self.actions[1]),
            )
            rewards = compute_rewards(transition, self.reward)
            x_min, x_max = self.hf.extent[:2]
            reached = (self.state.position[0] - x_min) / (x_max - x_min)
            self.progress = max(self.progress, float(np.clip(reached, 0, 1)))
        else:
            rewards = RewardGroups(0.0, 0.0, 0.0)
        if outcome is Outcome.FINISHED:
            self.progress = 1.0
        self.actions = [action, self.actions[0]]

        if self.recorder is not None:
            self.recorder.record(
                self.step_count,
                self.step_count * ep.control_dt,
                self.state,
                self.track.cursor,
                outcome.value,
            )
        result = StepResult(
            rewards, outcome, self.progress, arrived, self.step_count
        )
        if outcome.done:
            return None, result

        obs = self._proprio()
        self.history.push(obs)
        if self.lane.render_depth:
            self.pipeline.observe(self.step_count, self._render)
        return self._observe(obs), result

    def observation(self):
        """Observation of the current state without advancing"""
        return self._observe(self.history.array()[-1])

    def state_dict(self):
        """Arrays that restore the episode exactly, spec and RNG as JSON"""
        pipeline = self.pipeline
        frames = list(pipeline.frames)
        pending = pipeline.pending
        cfg = self.camera
        empty = np.zeros((0, cfg.height, cfg.width))
        return {
            "spec": np.array(json.dumps(list(self.spec.key))),
            "rng": np.array(json.dumps(self.rng.bit_generator.state)),
            "level": np.array(self.level),
            "robot": self.state.to_array(),
            "cursor": np.array([self.track.cursor, self.track.completed]),
            "counters": np.array([self.step_count, self.progress]),
            "actions": np.stack(self.actions),
            "history": self.history.array(),
            "delay": np.array(pipeline.delay),
            "frames": np.stack([f.values for f in frames])
            if frames
            else empty,
            "frame_steps": np.array([f.step for f in frames], dtype=int),
            "pending_due": np.array([due for due, _ in pending], dtype=int),
            "pending": np.stack([f.values for _, f in pending])
            if pending
            else empty,
            "pending_steps": np.array(
                [f.step for _, f in pending], dtype=int
            ),
        }

    def load_state_dict(self, state):
        self._load(TerrainSpec(*json.loads(str(state["spec"]))))
        self.rng.bit_generator.state = json.loads(str(state["rng"]))
        self.level = int(state["level"])
        self.state = RobotState.from_array(state["robot"])
        cursor, completed = state["cursor"]
        self.track.cursor = int(cursor)
        self.track.completed = bool(completed)
        step_count, progress = state["counters"]
        self.step_count = int(step_count)
        self.progress = float(progress)
        self.actions = [np.array(a) for a in state["actions"]]
        self.history.window = deque(
            [np.array(o) for o in state["history"]],
            maxlen=self.history.length,
        )

        cfg = self.camera
        pipeline = self.pipeline
        pipeline.delay = int(state["delay"])
        pipeline.frames = deque(
            [
                DepthImage(np.array(v), cfg.z_min, cfg.z_max, int(s))
                for v, s in zip(state["frames"], state["frame_steps"])
            ],
            maxlen=cfg.history,
        )
        pipeline.pending = [
            (int(due), DepthImage(np.array(v), cfg.z_min, cfg.z_max, int(s)))
            for due, v, s in zip(
                state["pending_due"], state["pending"], state["pending_steps"]
            )
        ]
