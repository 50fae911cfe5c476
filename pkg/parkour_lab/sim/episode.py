from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..terrain import SURFACE, sample_heights
from .robot import BodyConfig, RobotState, rotation_from_euler


class Outcome(str, Enum):
    """Episode status after a control step"""

    RUNNING = "running"
    FELL = "fell"
    COLLIDED = "collided"
    FINISHED = "finished"
    TIMEOUT = "timeout"

    @property
    def done(self):
        return self is not Outcome.RUNNING


@dataclass(frozen=True)
class EpisodeConfig:
    """
    Episode timing, termination and reset parameters

    Attributes
    ----------
    sim_dt : float
        Physics substep, seconds
    control_decimation : int
        Substeps per control step
    max_steps : int
        Control steps before a timeout
    roll_limit, pitch_limit : float
        Orientation limits in radians
    base_floor : float
        Minimum base height above the local terrain, meters
    fall_z : float
        Absolute base height below which the robot is in a pit, meters
    collision_force : float
        Base-box contact force that ends the episode, N
    command : tuple of float
        Commanded (v_x, v_y, omega_z)
    start_x : float
        Start position along the lane, meters
    finish_pad : float
        Distance of the finish line from the lane end, meters
    pad_radius : float
        Radius of the flat area required around the start, meters
    roll_noise, pitch_noise, yaw_noise : float
        Uniform half-ranges of the initial orientation perturbation
    """

    sim_dt: float = 0.005
    control_decimation: int = 4
    max_steps: int = 1000
    roll_limit: float = 1.2
    pitch_limit: float = 1.2
    base_floor: float = 0.1
    fall_z: float = -0.5
    collision_force: float = 400.0
    command: tuple = (1.5, 0.0, 0.0)
    start_x: float = 1.0
    finish_pad: float = 2.0
    pad_radius: float = 0.5
    roll_noise: float = 0.05
    pitch_noise: float = 0.05
    yaw_noise: float = 0.1

    def __post_init__(self):
        if not self.sim_dt > 0:
            raise ValueError(
                "sim_dt must be positive, got {}".format(self.sim_dt)
            )
        if self.control_decimation < 1:
            raise ValueError(
                "control_decimation must be at least 1, got {}".format(
                    self.control_decimation
                )
            )

    @property
    def control_dt(self):
        return self.sim_dt * self.control_decimation


def finish_x(hf, config):
    """World x of the finish line of a lane"""
    return hf.extent[1] - config.finish_pad


def _check_start_pad(hf, config, h_edge=0.25):
    cs = hf.cell_size
    x0, x1, y0, y1 = hf.extent
    start = np.array([config.start_x, 0.0])
    if not (x0 <= start[0] <= x1 and y0 <= start[1] <= y1):
        raise RuntimeError(
            "Start position {} lies outside the terrain".format(start)
        )
    ci, cj = hf.nearest_cell(*start)
    reach = int(np.ceil(config.pad_radius / cs))
    window = (
        slice(max(0, ci - reach), min(hf.rows, ci + reach + 1)),
        slice(max(0, cj - reach), min(hf.cols, cj + reach + 1)),
    )
    heights = hf.heights[window]
    if np.any(hf.labels[window] != SURFACE) or np.ptp(heights) > h_edge:
        raise RuntimeError(
            "No flat start pad around x={} (height range {:.2f} m)".format(
                config.start_x, float(np.ptp(heights))
            )
        )


def reset(hf, track, seed, body=None, config=None):
    """
    Place the robot on the start pad

    The base faces +x with a small random orientation perturbation and is
    lifted so that its lowest foot just touches the terrain.

    Parameters
    ----------
    hf : Heightfield
        Lane terrain
    track : FootholdTrack
        Track of the same lane; its cursor moves to the first foothold
        ahead of the base
    seed : int or numpy.random.Generator
        Source of the perturbation
    body : BodyConfig, optional
        Body parameters, by default BodyConfig()
    config : EpisodeConfig, optional
        Reset parameters, by default EpisodeConfig()

    Returns
    -------
    RobotState
        Initial state at rest
    """
    body = body or BodyConfig()
    config = config or EpisodeConfig()
    _check_start_pad(hf, config)
    rng = np.random.default_rng(seed)

    roll = rng.uniform(-config.roll_noise, config.roll_noise)
    pitch = rng.uniform(-config.pitch_noise, config.pitch_noise)
    yaw = rng.uniform(-config.yaw_noise, config.yaw_noise)
    rotation = rotation_from_euler(roll, pitch, yaw)

    feet = rotation.apply(body.nominal_feet())
    feet[:, :2] += (config.start_x, 0.0)
    ground = sample_heights(hf, feet[:, 0], feet[:, 1], clamp=True)
    z = float(np.max(ground - feet[:, 2]))

    state = RobotState.at_rest(
        (config.start_x, 0.0, z), roll, pitch, yaw, config=body
    )
    track.reset(state.position)
    return state


def check_termination(state, config, hf, step_count=0, report=None):
    """
    Classify the state after a control step

    Parameters
    ----------
    state : RobotState
        State to classify
    config : EpisodeConfig
        Limits and the finish pad length
    hf : Heightfield
        Lane terrain
    step_count : int, optional
        Control steps taken so far, by default 0
    report : ContactReport, optional
        Contact report of the last step, used for the collision check

    Returns
    -------
    Outcome
        Fell and collided take precedence over finished and timeout
    """
    if not state.valid or not state.is_finite():
        return Outcome.FELL

    roll, pitch, _ = state.euler
    x, y, z = state.position
    ground = float(sample_heights(hf, x, y, clamp=True))
    if (
        abs(roll) > config.roll_limit
        or abs(pitch) > config.pitch_limit
        or z < ground + config.base_floor
        or z < config.fall_z
    ):
        return Outcome.FELL
    if report is not None and report.body_force > config.collision_force:
        return Outcome.COLLIDED
    if x >= finish_x(hf, config):
        return Outcome.FINISHED
    if step_count >= config.max_steps:
        return Outcome.TIMEOUT
    return Outcome.RUNNING
