from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from ..terrain import WALL, sample_heights, surface_normals
from .robot import BodyConfig, foot_targets


@dataclass(frozen=True)
class ContactConfig:
    """
    Penalty contact parameters

    Attributes
    ----------
    k_n : float
        Normal stiffness, N/m
    c_n : float
        Normal damping, N s/m
    c_t : float
        Tangential damping before Coulomb clipping, N s/m
    mu : float
        Friction coefficient on rough surfaces
    mu_wall : float
        Friction coefficient on smooth wall bands
    body_k, body_c : float
        Stiffness and damping of base-box corner contacts
    """

    k_n: float = 5000.0
    c_n: float = 50.0
    c_t: float = 100.0
    mu: float = 0.8
    mu_wall: float = 0.6
    body_k: float = 5000.0
    body_c: float = 50.0


@dataclass
class ContactReport:
    """
    Contact summary of one control step

    Attributes
    ----------
    normal_forces : numpy.ndarray
        Per-foot normal force magnitude at the last substep, N
    tangential_forces : numpy.ndarray
        Per-foot tangential force magnitude at the last substep, N
    friction_limits : numpy.ndarray
        Per-foot friction bound mu * normal force at the last substep
    cone_violation : float
        Largest tangential excess over the friction bound seen in any
        substep (zero when the friction cone always held)
    wall_contact : numpy.ndarray
        Per-foot flags for contact on a wall band
    n_collisions : int
        Base-box corners touching the terrain at the last substep
    body_force : float
        Largest total base-box contact force over the substeps, N
    foot_power : float
        Mean over substeps of sum |F . v| at the feet, W
    offset_acceleration : numpy.ndarray
        (4, 3) foot-offset accelerations at the last substep
    valid : bool
        False when integration produced a non-finite state
    """

    normal_forces: np.ndarray
    tangential_forces: np.ndarray
    friction_limits: np.ndarray
    cone_violation: float
    wall_contact: np.ndarray
    n_collisions: int
    body_force: float
    foot_power: float
    offset_acceleration: np.ndarray
    valid: bool = True


def _penalty_forces(hf, points, velocities, k, c, c_t, mu, mu_wall):
    """
    Penalty forces on world points touching the heightfield

    Returns the (n, 3) forces, penetration mask, normal and tangential
    magnitudes, the per-point friction coefficient and wall flags.
    """
    x, y = points[:, 0], points[:, 1]
    heights = sample_heights(hf, x, y, clamp=True)
    normals = surface_normals(hf, x, y)
    depth = (heights - points[:, 2]) * normals[:, 2]
    touching = depth > 0.0

    on_wall = hf.label_at(x, y) == WALL
    friction = np.where(on_wall, mu_wall, mu)
    v_normal = np.einsum("ij,ij->i", velocities, normals)
    f_normal = np.where(touching, np.maximum(0.0, k * depth - c * v_normal), 0)

    v_tangent = velocities - v_normal[:, None] * normals
    f_tangent = -c_t * v_tangent * touching[:, None]
    magnitude = np.linalg.norm(f_tangent, axis=1)
    limit = friction * f_normal
    scale = np.where(
        magnitude > limit, limit / np.maximum(magnitude, 1e-300), 1.0
    )
    f_tangent = f_tangent * scale[:, None]

    forces = f_normal[:, None] * normals + f_tangent
    return (
        forces,
        touching,
        f_normal,
        np.linalg.norm(f_tangent, axis=1),
        friction,
        on_wall,
    )


def mechanical_energy(state, config=None):
    """
    Kinetic plus potential energy of the base

    Parameters
    ----------
    state : RobotState
        Robot state
    config : BodyConfig, optional
        Mass, inertia and gravity, by default BodyConfig()

    Returns
    -------
    float
        Energy in joules (feet are massless)
    """
    config = config or BodyConfig()
    inertia = np.asarray(config.inertia, dtype=np.float64)
    w = state.angular_velocity
    return float(
        0.5 * config.mass * state.velocity @ state.velocity
        + 0.5 * w @ (inertia * w)
        + config.mass * config.gravity * state.position[2]
    )


def _substep(state, targets, hf, body, contact, dt, diag):
    rotation = state.rotation
    inertia = np.asarray(body.inertia, dtype=np.float64)
    nominal = body.nominal_feet()
    p = state.position
    v = state.velocity
    w = state.angular_velocity

    # Feet ride on the base; the offsets follow a spring-damper law
    local = nominal + state.foot_offsets
    feet = p + rotation.apply(local)
    foot_vel = v + rotation.apply(np.cross(w, local) + state.foot_velocities)
    f_feet, touching, f_n, f_t, mu, on_wall = _penalty_forces(
        hf,
        feet,
        foot_vel,
        contact.k_n,
        contact.c_n,
        contact.c_t,
        contact.mu,
        contact.mu_wall,
    )

    corners = body.box_corners()
    corner_pos = p + rotation.apply(corners)
    corner_vel = v + rotation.apply(np.cross(w, corners))
    f_box, box_touch, box_n, _, _, _ = _penalty_forces(
        hf,
        corner_pos,
        corner_vel,
        contact.body_k,
        contact.body_c,
        contact.c_t,
        contact.mu,
        contact.mu_wall,
    )

    force = f_feet.sum(axis=0) + f_box.sum(axis=0)
    force[2] -= body.mass * body.gravity
    force -= body.linear_damping * v
    torque = np.cross(feet - p, f_feet).sum(axis=0)
    torque += np.cross(corner_pos - p, f_box).sum(axis=0)
    torque_body = rotation.inv().apply(torque)

    # Semi-implicit Euler on the base
    v_next = v + dt * force / body.mass
    p_next = p + dt * v_next

    # Gyroscopic update rescaled to keep the rotational energy
    gyro = w + dt * (-np.cross(w, inertia * w)) / inertia
    before = w @ (inertia * w)
    after = gyro @ (inertia * gyro)
    if after > 0.0:
        gyro = gyro * np.sqrt(before / after)
    w_next = gyro + dt * (torque_body - body.angular_damping * gyro) / inertia
    rotation_next = rotation * Rotation.from_rotvec(w_next * dt)

    accel = (
        body.kp * (targets - state.foot_offsets)
        - body.kd * state.foot_velocities
    ) / body.leg_mass
    offset_vel = state.foot_velocities + dt * accel
    offsets = state.foot_offsets + dt * offset_vel

    state.position = p_next
    state.velocity = v_next
    state.angular_velocity = w_next
    state.quaternion = rotation_next.as_quat()
    state.foot_offsets = offsets
    state.foot_velocities = offset_vel
    state.contact = touching
    state.contact_forces = f_feet
    state.feet = p_next + rotation_next.apply(nominal + offsets)

    diag["normal"] = f_n
    diag["tangent"] = f_t
    diag["limit"] = mu * f_n
    diag["violation"] = max(
        diag.get("violation", 0.0), float(np.max(f_t - mu * f_n))
    )
    diag["wall"] = touching & on_wall
    diag["n_col"] = int(box_touch.sum())
    diag["body_force"] = max(diag.get("body_force", 0.0), float(box_n.sum()))
    diag["power"] = diag.get("power", 0.0) + float(
        np.abs(np.einsum("ij,ij->i", f_feet, foot_vel)).sum()
    )
    diag["accel"] = accel


def step(
    state,
    action,
    hf,
    body=None,
    contact=None,
    sim_dt=0.005,
    decimation=4,
):
    """
    Advance the robot by one control step

    Foot offsets track the scaled action targets, feet and base-box corners
    that penetrate the terrain receive penalty forces along the local
    surface normal with Coulomb-clipped tangential damping, and the base
    integrates with semi-implicit Euler for ``decimation`` substeps.

    Parameters
    ----------
    state : RobotState
        Current state, left unchanged
    action : array_like
        12 normalized foot targets in [-1, 1]
    hf : Heightfield
        Terrain
    body : BodyConfig, optional
        Body parameters, by default BodyConfig()
    contact : ContactConfig, optional
        Contact parameters, by default ContactConfig()
    sim_dt : float, optional
        Substep length in seconds, by default 0.005
    decimation : int, optional
        Substeps per control step, by default 4

    Returns
    -------
    tuple
        Next RobotState and the ContactReport of the step
    """
    body = body or BodyConfig()
    contact = contact or ContactConfig()
    if not sim_dt > 0:
        raise ValueError("sim_dt must be positive, got {}".format(sim_dt))
    if decimation < 1:
        raise ValueError(
            "Decimation must be at least 1, got {}".format(decimation)
        )

    targets = foot_targets(action, body)
    nxt = state.copy()
    diag = {}
    if not nxt.is_finite():
        nxt.valid = False
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(decimation):
            if not nxt.valid:
                break
            _substep(nxt, targets, hf, body, contact, sim_dt, diag)
            if not nxt.is_finite():
                nxt.valid = False

    if not diag:
        zeros = np.zeros(4)
        return nxt, ContactReport(
            zeros,
            zeros,
            zeros,
            0.0,
            np.zeros(4, dtype=bool),
            0,
            0.0,
            0.0,
            np.zeros((4, 3)),
            valid=False,
        )
    return nxt, ContactReport(
        normal_forces=diag["normal"],
        tangential_forces=diag["tangent"],
        friction_limits=diag["limit"],
        cone_violation=max(0.0, diag["violation"]),
        wall_contact=diag["wall"],
        n_collisions=diag["n_col"],
        body_force=diag["body_force"],
        foot_power=diag["power"] / decimation,
        offset_acceleration=diag["accel"],
        valid=nxt.valid,
    )
