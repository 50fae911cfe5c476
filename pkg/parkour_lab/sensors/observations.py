from collections import deque
from dataclasses import dataclass

import numpy as np

from ..foothold import polar_prior
from ..terrain import GridSpec, sample_local_grid

# Component order of the 45-dim proprioceptive observation
OBSERVATION_LAYOUT = (
    ("angular_velocity", 3),
    ("gravity", 3),
    ("command", 3),
    ("foot_offsets", 12),
    ("foot_velocities", 12),
    ("previous_action", 12),
)

# Critic-only additions appended after the observation
PRIVILEGED_LAYOUT = (
    ("base_velocity", 3),
    ("foothold", 3),
    ("next_foothold", 3),
    ("front_feet", 6),
)

# Foothold prior encodings fed to the actor, with their sizes
PRIOR_SIZES = {"polar": 4, "yaw": 2, "cartesian": 6, "none": 0}


def _slices(layout):
    slices, start = {}, 0
    for name, size in layout:
        slices[name] = slice(start, start + size)
        start += size
    return slices, start


OBSERVATION_SLICES, OBSERVATION_SIZE = _slices(OBSERVATION_LAYOUT)
_, _EXTRA_SIZE = _slices(PRIVILEGED_LAYOUT)
PRIVILEGED_SIZE = OBSERVATION_SIZE + _EXTRA_SIZE


@dataclass(frozen=True)
class NoiseConfig:
    """
    Uniform additive observation noise

    Attributes
    ----------
    enabled : bool
        Noise is only added when set
    angular_velocity, gravity, foot_offsets, foot_velocities : float
        Half-width of the uniform noise of each channel group
    """

    enabled: bool = False
    angular_velocity: float = 0.2
    gravity: float = 0.05
    foot_offsets: float = 0.01
    foot_velocities: float = 0.1


def assemble_observation(state, command, prev_action, noise=None, rng=None):
    """
    Proprioceptive observation o_t

    Parameters
    ----------
    state : RobotState
        Current robot state
    command : array_like
        Commanded (v_x, v_y, omega_z)
    prev_action : array_like
        12 values of the previous action
    noise : NoiseConfig, optional
        Additive noise per channel group, by default disabled
    rng : numpy.random.Generator, optional
        Noise source, required when noise is enabled

    Returns
    -------
    numpy.ndarray
        45 values laid out as OBSERVATION_LAYOUT
    """
    parts = {
        "angular_velocity": state.angular_velocity,
        "gravity": state.gravity_in_body(),
        "command": command,
        "foot_offsets": state.foot_offsets,
        "foot_velocities": state.foot_velocities,
        "previous_action": prev_action,
    }
    obs = np.zeros(OBSERVATION_SIZE)
    for name, size in OBSERVATION_LAYOUT:
        values = np.ravel(np.asarray(parts[name], dtype=np.float64))
        if values.size != size:
            raise ValueError(
                "Observation part '{}' needs {} values, got {}".format(
                    name, size, values.size
                )
            )
        obs[OBSERVATION_SLICES[name]] = values

    if noise is not None and noise.enabled:
        if rng is None:
            raise ValueError("Observation noise requires an rng")
        for name, size in OBSERVATION_LAYOUT:
            scale = getattr(noise, name, 0.0)
            if scale > 0:
                obs[OBSERVATION_SLICES[name]] += rng.uniform(
                    -scale, scale, size
                )
    return obs


def split_observation(obs):
    """Slice an observation back into its named parts"""
    obs = np.asarray(obs)
    return {name: obs[s] for name, s in OBSERVATION_SLICES.items()}


def _to_base(state, points):
    return state.rotation.inv().apply(np.asarray(points) - state.position)


@dataclass
class PrivilegedObservation:
    """
    Critic inputs of one control step

    Attributes
    ----------
    state : numpy.ndarray
        s_t: the observation followed by base velocity, current and next
        foothold and both front feet, all in the base frame
    heights : numpy.ndarray
        H_t: local terrain heights relative to the base
    prior : numpy.ndarray
        Ground-truth polar foothold prior f_t
    """

    state: np.ndarray
    heights: np.ndarray
    prior: np.ndarray


def privileged_observation(
    obs, state, track, hf, grid_spec=None, planar=False
):
    """
    Assemble s_t, H_t and the ground-truth prior for the critics

    Parameters
    ----------
    obs : numpy.ndarray
        Noise-free observation of the same step
    state : RobotState
        Current robot state
    track : FootholdTrack
        Track with the current cursor
    hf : Heightfield
        Lane terrain
    grid_spec : GridSpec, optional
        Height grid layout, by default GridSpec()
    planar : bool, optional
        Horizontal foot distances in the prior, by default False

    Returns
    -------
    PrivilegedObservation
    """
    grid_spec = grid_spec or GridSpec()
    left, right = state.front_feet()
    extra = np.concatenate(
        [
            state.body_velocity(),
            _to_base(state, track.current()),
            _to_base(state, track.following()),
            _to_base(state, left),
            _to_base(state, right),
        ]
    )
    heights = sample_local_grid(hf, state.position, state.yaw, grid_spec)
    prior = polar_prior(state, track, planar).as_array()
    return PrivilegedObservation(
        np.concatenate([np.asarray(obs, dtype=np.float64), extra]),
        heights,
        prior,
    )


def prior_features(state, track, kind="polar", planar=False):
    """
    Foothold prior in one of the actor encodings

    ``polar`` is (d_L, d_R, psi, psi_next), ``yaw`` keeps only the two
    heading errors, ``cartesian`` is the current and next foothold in the
    base frame and ``none`` is empty.
    """
    if kind not in PRIOR_SIZES:
        raise ValueError(
            "Unknown prior encoding '{}', expected one of {}".format(
                kind, sorted(PRIOR_SIZES)
            )
        )
    if kind == "none":
        return np.zeros(0)
    if kind == "cartesian":
        return np.concatenate(
            [
                _to_base(state, track.current()),
                _to_base(state, track.following()),
            ]
        )
    prior = polar_prior(state, track, planar).as_array()
    return prior[2:] if kind == "yaw" else prior


class ProprioHistory:
    """
    Rolling window of the last observations, oldest first

    Methods
    -------
    reset(obs):
        Fill the whole window with one observation

    push(obs):
        Append an observation and return the window
    """

    def __init__(self, length=10):
        if length < 1:
            raise ValueError(
                "History length must be at least 1, got {}".format(length)
            )
        self.length = length
        self.window = deque(maxlen=length)

    def reset(self, obs):
        self.window.clear()
        self.window.extend([np.array(obs)] * self.length)
        return self.array()

    def push(self, obs):
        if not self.window:
            return self.reset(obs)
        self.window.append(np.array(obs))
        return self.array()

    def array(self):
        return np.stack(self.window)
