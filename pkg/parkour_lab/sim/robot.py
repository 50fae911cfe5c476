from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

# Foot order used by every per-foot array: front left, front right,
# rear left, rear right. Left is +y in the base frame.
FOOT_NAMES = ("FL", "FR", "RL", "RR")


@dataclass(frozen=True)
class BodyConfig:
    """
    Reduced-order quadruped parameters

    Attributes
    ----------
    mass : float
        Base mass in kg
    inertia : tuple of float
        Principal base inertia (Ixx, Iyy, Izz) in kg m^2
    box_size : tuple of float
        Base box (length, width, height) in meters
    stance_height : float
        Nominal base height above the ground at stance, meters
    hip_x, hip_y : float
        Nominal foot placement offsets in the base frame, meters
    leg_mass : float
        Effective mass of the foot-offset tracking law, kg
    kp, kd : float
        Foot-offset tracking gains
    action_scale : tuple of float
        Workspace half-extent of the foot targets along (x, y, z), meters
    gravity : float
        Gravitational acceleration, m/s^2
    linear_damping, angular_damping : float
        Viscous damping on the base velocities
    """

    mass: float = 12.0
    inertia: tuple = (0.13, 0.3425, 0.3925)
    box_size: tuple = (0.55, 0.30, 0.20)
    stance_height: float = 0.30
    hip_x: float = 0.2
    hip_y: float = 0.12
    leg_mass: float = 0.05
    kp: float = 20.0
    kd: float = 0.5
    action_scale: tuple = (0.15, 0.10, 0.15)
    gravity: float = 9.81
    linear_damping: float = 0.0
    angular_damping: float = 0.0

    def nominal_feet(self):
        """(4, 3) nominal foot positions in the base frame"""
        x, y, z = self.hip_x, self.hip_y, -self.stance_height
        return np.array(
            [[x, y, z], [x, -y, z], [-x, y, z], [-x, -y, z]],
            dtype=np.float64,
        )

    def box_corners(self):
        """(8, 3) base box corners in the base frame"""
        half = 0.5 * np.asarray(self.box_size, dtype=np.float64)
        signs = np.array(
            [
                [sx, sy, sz]
                for sx in (1, -1)
                for sy in (1, -1)
                for sz in (1, -1)
            ],
            dtype=np.float64,
        )
        return signs * half


def rotation_from_euler(roll, pitch, yaw):
    """
    Base rotation from roll, pitch and yaw

    Positive pitch raises the nose, so the matrix is
    ``Rz(yaw) @ Ry(-pitch) @ Rx(roll)``.
    """
    return Rotation.from_euler("ZYX", [yaw, -pitch, roll])


def euler_from_rotation(rotation):
    """(roll, pitch, yaw) of a base rotation, inverse of rotation_from_euler"""
    yaw, neg_pitch, roll = rotation.as_euler("ZYX")
    return float(roll), float(-neg_pitch), float(yaw)


def foot_targets(action, config):
    """
    Scale a normalized action into per-foot target offsets

    Parameters
    ----------
    action : array_like
        12 values, clipped to [-1, 1]
    config : BodyConfig
        Provides the workspace half-extents

    Returns
    -------
    numpy.ndarray
        (4, 3) target offsets relative to the nominal stance
    """
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (12,):
        raise ValueError(
            "Action must have 12 components, got shape {}".format(action.shape)
        )
    action = np.clip(action, -1.0, 1.0).reshape(4, 3)
    return action * np.asarray(config.action_scale, dtype=np.float64)


@dataclass
class RobotState:
    """
    Reduced-order robot state

    Attributes
    ----------
    position : numpy.ndarray
        World base position, meters
    quaternion : numpy.ndarray
        Base orientation as a scalar-last unit quaternion
    velocity : numpy.ndarray
        World-frame linear velocity, m/s
    angular_velocity : numpy.ndarray
        Base-frame angular velocity, rad/s
    foot_offsets : numpy.ndarray
        (4, 3) foot offsets from the nominal stance in the base frame
    foot_velocities : numpy.ndarray
        (4, 3) foot offset rates
    contact : numpy.ndarray
        Per-foot contact flags
    contact_forces : numpy.ndarray
        (4, 3) world-frame contact forces on the feet, N
    feet : numpy.ndarray
        (4, 3) world-frame foot positions
    valid : bool
        Cleared when the integrator produced a non-finite value
    """

    position: np.ndarray
    quaternion: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    foot_offsets: np.ndarray = field(default_factory=lambda: np.zeros((4, 3)))
    foot_velocities: np.ndarray = field(
        default_factory=lambda: np.zeros((4, 3))
    )
    contact: np.ndarray = field(
        default_factory=lambda: np.zeros(4, dtype=bool)
    )
    contact_forces: np.ndarray = field(
        default_factory=lambda: np.zeros((4, 3))
    )
    feet: np.ndarray = field(default_factory=lambda: np.zeros((4, 3)))
    valid: bool = True

    # Flat layout used by the resume sidecar
    LAYOUT = (
        ("position", (3,)),
        ("quaternion", (4,)),
        ("velocity", (3,)),
        ("angular_velocity", (3,)),
        ("foot_offsets", (4, 3)),
        ("foot_velocities", (4, 3)),
        ("contact", (4,)),
        ("contact_forces", (4, 3)),
        ("feet", (4, 3)),
    )

    @classmethod
    def at_rest(cls, position, roll=0.0, pitch=0.0, yaw=0.0, config=None):
        """State at rest with feet at the nominal stance"""
        config = config or BodyConfig()
        rotation = rotation_from_euler(roll, pitch, yaw)
        position = np.asarray(position, dtype=np.float64).copy()
        state = cls(position, rotation.as_quat())
        state.feet = position + rotation.apply(config.nominal_feet())
        return state

    @property
    def rotation(self):
        return Rotation.from_quat(self.quaternion)

    @property
    def euler(self):
        return euler_from_rotation(self.rotation)

    @property
    def roll(self):
        return self.euler[0]

    @property
    def pitch(self):
        return self.euler[1]

    @property
    def yaw(self):
        return self.euler[2]

    def gravity_in_body(self):
        """Unit gravity direction (world -z) expressed in the base frame"""
        return self.rotation.inv().apply(np.array([0.0, 0.0, -1.0]))

    def body_velocity(self):
        """Linear velocity in the base frame"""
        return self.rotation.inv().apply(self.velocity)

    def world_angular_velocity(self):
        return self.rotation.apply(self.angular_velocity)

    def front_feet(self):
        return self.feet[0], self.feet[1]

    def copy(self):
        return RobotState(
            *(np.array(getattr(self, name)) for name, _ in self.LAYOUT),
            valid=self.valid,
        )

    def is_finite(self):
        return all(
            np.all(np.isfinite(getattr(self, name))) for name, _ in self.LAYOUT
        )

    def to_array(self):
        """Flatten into a float64 vector (validity appended last)"""
        parts = [
            np.asarray(getattr(self, name), dtype=np.float64).ravel()
            for name, _ in self.LAYOUT
        ]
        parts.append(np.array([1.0 if self.valid else 0.0]))
        return np.concatenate(parts)

    @classmethod
    def from_array(cls, values):
        values = np.asarray(values, dtype=np.float64)
        size = sum(int(np.prod(shape)) for _, shape in cls.LAYOUT) + 1
        if values.shape != (size,):
            raise ValueError(
                "State vector must have {} values, got shape {}".format(
                    size, values.shape
                )
            )
        fields, start = {}, 0
        for name, shape in cls.LAYOUT:
            count = int(np.prod(shape))
            fields[name] = values[start : start + count].reshape(shape).copy()
            start += count
        fields["contact"] = fields["contact"] > 0.5
        return cls(**fields, valid=bool(values[-1] > 0.5))
