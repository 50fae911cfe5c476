from dataclasses import dataclass, field

import numpy as np

from ..nn import REWARD_GROUPS


@dataclass(frozen=True)
class RewardConfig:
    """
    Reward term weights and shaping constants

    Term weights multiply the raw terms inside their group; group weights
    combine the groups (advantage mixing and the single-critic scalar).

    Attributes
    ----------
    tracking_lin, tracking_ang : float
        Task group: linear and yaw-rate velocity tracking
    foothold_dense, foothold_sparse, foothold_yaw : float
        Foothold group: distance shaping, arrival bonus and heading
    lin_vel_z, ang_vel_xy, orientation, acceleration, power, collision,
    action_rate, smoothness : float
        Style group regularization weights
    tracking_scale : float
        Exponent coefficient of the tracking kernels
    sparse_eps : float
        Both front feet within this distance earn the sparse bonus, meters
    group_weights : tuple of float
        Weights of the task, foothold and style groups
    """

    tracking_lin: float = 1.0
    tracking_ang: float = 0.5
    foothold_dense: float = 1.0
    foothold_sparse: float = 1.0
    foothold_yaw: float = 1.0
    lin_vel_z: float = -1.0
    ang_vel_xy: float = -0.05
    orientation: float = -1.0
    acceleration: float = -2.5e-7
    power: float = -2e-5
    collision: float = -10.0
    action_rate: float = -0.01
    smoothness: float = -0.01
    tracking_scale: float = 4.0
    sparse_eps: float = 0.2
    group_weights: tuple = (3.0, 1.5, 1.0)

    def __post_init__(self):
        if len(self.group_weights) != len(REWARD_GROUPS):
            raise ValueError(
                "Need one weight per reward group {}, got {}".format(
                    REWARD_GROUPS, self.group_weights
                )
            )

    def group_weight(self, group):
        return dict(zip(REWARD_GROUPS, self.group_weights))[group]


@dataclass
class Transition:
    """
    Quantities of one control step that the reward terms read

    Attributes
    ----------
    command : numpy.ndarray
        Commanded (v_x, v_y, omega_z)
    velocity : numpy.ndarray
        Base linear velocity in the base frame
    angular_velocity : numpy.ndarray
        Base angular velocity in the base frame
    gravity : numpy.ndarray
        Unit gravity direction in the base frame
    prior : numpy.ndarray
        Ground-truth polar prior (d_L, d_R, psi, psi_next)
    offset_acceleration : numpy.ndarray
        (4, 3) foot-offset accelerations, the joint acceleration analog
    foot_power : float
        Sum of |F . v| at the feet, the joint power analog
    n_collisions : int
        Base-box corners touching the terrain
    action, prev_action, prev_prev_action : numpy.ndarray
        Actions of this and the two previous steps
    """

    command: np.ndarray
    velocity: np.ndarray
    angular_velocity: np.ndarray
    gravity: np.ndarray
    prior: np.ndarray
    offset_acceleration: np.ndarray
    foot_power: float
    n_collisions: int
    action: np.ndarray
    prev_action: np.ndarray
    prev_prev_action: np.ndarray

    @classmethod
    def from_step(cls, state, report, prior, command, actions):
        """
        Build a transition from a simulator step

        Parameters
        ----------
        state : RobotState
            State after the step
        report : ContactReport
            Contact report of the step
        prior : array_like
            Ground-truth polar prior after the step
        command : array_like
            Commanded velocity
        actions : sequence of array_like
            This action and the two before it, newest first
        """
        action, prev_action, prev_prev_action = (
            np.asarray(a, dtype=np.float64) for a in actions
        )
        return cls(
            command=np.asarray(command, dtype=np.float64),
            velocity=state.body_velocity(),
            angular_velocity=np.asarray(state.angular_velocity),
            gravity=state.gravity_in_body(),
            prior=np.asarray(prior, dtype=np.float64),
            offset_acceleration=np.asarray(report.offset_acceleration),
            foot_power=float(report.foot_power),
            n_collisions=int(report.n_collisions),
            action=action,
            prev_action=prev_action,
            prev_prev_action=prev_prev_action,
        )


def _tracking_lin(t, config):
    error = t.command[:2] - t.velocity[:2]
    return float(np.exp(-config.tracking_scale * np.dot(error, error)))


def _tracking_ang(t, config):
    error = t.command[2] - t.angular_velocity[2]
    return float(np.exp(-config.tracking_scale * error * error))


def _foothold_dense(t, config):
    return float(np.exp(-(t.prior[0] + t.prior[1])))


def _foothold_sparse(t, config):
    eps = config.sparse_eps
    return float(t.prior[0] < eps and t.prior[1] < eps)


def _foothold_yaw(t, config):
    return float(np.exp(-abs(t.prior[2])))


def _lin_vel_z(t, config):
    return float(t.velocity[2] ** 2)


def _ang_vel_xy(t, config):
    return float(np.sum(np.square(t.angular_velocity[:2])))


def _orientation(t, config):
    return float(np.sum(np.square(t.gravity[:2])))


def _acceleration(t, config):
    return float(np.sum(np.square(t.offset_acceleration)))


def _power(t, config):
    return float(t.foot_power)


def _collision(t, config):
    return float(t.n_collisions)


def _action_rate(t, config):
    return float(np.sum(np.square(t.action - t.prev_action)))


def _smoothness(t, config):
    jerk = t.action - 2.0 * t.prev_action + t.prev_prev_action
    return float(np.sum(np.square(jerk)))


# Term name -> (group, raw term); the weight is the RewardConfig field of
# the same name
REWARD_TERMS = {
    "tracking_lin": ("task", _tracking_lin),
    "tracking_ang": ("task", _tracking_ang),
    "foothold_dense": ("foothold", _foothold_dense),
    "foothold_sparse": ("foothold", _foothold_sparse),
    "foothold_yaw": ("foothold", _foothold_yaw),
    "lin_vel_z": ("style", _lin_vel_z),
    "ang_vel_xy": ("style", _ang_vel_xy),
    "orientation": ("style", _orientation),
    "acceleration": ("style", _acceleration),
    "power": ("style", _power),
    "collision": ("style", _collision),
    "action_rate": ("style", _action_rate),
    "smoothness": ("style", _smoothness),
}


@dataclass
class RewardGroups:
    """
    Grouped reward of one control step

    Attributes
    ----------
    task, foothold, style : float
        Weighted sums of the terms of each group
    terms : dict
        Raw (unweighted) value of every term, for logging
    """

    task: float
    foothold: float
    style: float
    terms: dict = field(default_factory=dict)

    def as_array(self):
        return np.array([getattr(self, g) for g in REWARD_GROUPS])

    def total(self, config=None):
        """Group-weighted scalar reward"""
        config = config or RewardConfig()
        return float(np.dot(config.group_weights, self.as_array()))


def compute_rewards(transition, config=None):
    """
    Evaluate every reward term and sum them into their groups

    Parameters
    ----------
    transition : Transition
        Step quantities
    config : RewardConfig, optional
        Weights, by default RewardConfig()

    Returns
    -------
    RewardGroups
        Per-group rewards with the raw term breakdown
    """
    config = config or RewardConfig()
    groups = {g: 0.0 for g in REWARD_GROUPS}
    terms = {}
    for name, (group, term) in REWARD_TERMS.items():
        value = term(transition, config)
        terms[name] = value
        groups[group] += getattr(config, name) * value
    return RewardGroups(terms=terms, **groups)
