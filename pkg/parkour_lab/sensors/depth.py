from collections import deque
from dataclasses import dataclass

import numpy as np

from ..sim.robot import rotation_from_euler
from ..terrain import sample_heights


@dataclass(frozen=True)
class CameraConfig:
    """
    Pinhole depth camera mounted on the base

    Attributes
    ----------
    width, height : int
        Image resolution in pixels
    hfov_deg : float
        Horizontal field of view in degrees (square pixels)
    z_min, z_max : float
        Depth clip range in meters
    mount : tuple of float
        Camera position in the base frame, meters
    pitch_deg : float
        Camera pitch relative to the base; negative looks down
    march_step : float
        Ray march step in meters
    bisections : int
        Bisection refinements after the first step below the surface
    period : int
        Control steps between rendered frames
    history : int
        Frames stacked for the policy
    max_delay : int
        Largest per-episode frame delivery delay, control steps
    """

    width: int = 64
    height: int = 48
    hfov_deg: float = 87.0
    z_min: float = 0.1
    z_max: float = 3.0
    mount: tuple = (0.3, 0.0, 0.05)
    pitch_deg: float = -30.0
    march_step: float = 0.02
    bisections: int = 8
    period: int = 5
    history: int = 2
    max_delay: int = 2

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(
                "Camera resolution must be positive, got {}x{}".format(
                    self.width, self.height
                )
            )
        if not 0.0 < self.z_min < self.z_max:
            raise ValueError(
                "Invalid clip range [{}, {}]".format(self.z_min, self.z_max)
            )
        if not 0.0 < self.hfov_deg < 180.0:
            raise ValueError(
                "Field of view must lie in (0, 180), got {}".format(
                    self.hfov_deg
                )
            )
        if not self.march_step > 0:
            raise ValueError(
                "march_step must be positive, got {}".format(self.march_step)
            )

    @property
    def focal(self):
        """Focal length in pixels"""
        return 0.5 * self.width / np.tan(0.5 * np.radians(self.hfov_deg))

    def ray_directions(self):
        """
        (height, width, 3) unit pixel rays in the camera frame

        The camera looks along +x with +y to the left and +z up, so image
        columns run toward -y and rows toward -z.
        """
        cols = np.arange(self.width) + 0.5 - 0.5 * self.width
        rows = np.arange(self.height) + 0.5 - 0.5 * self.height
        u, v = np.meshgrid(cols / self.focal, rows / self.focal)
        rays = np.stack([np.ones_like(u), -u, -v], axis=-1)
        return rays / np.linalg.norm(rays, axis=-1, keepdims=True)


@dataclass(frozen=True)
class CameraPose:
    """World position and orientation (scipy Rotation) of a camera"""

    position: np.ndarray
    rotation: object

    @classmethod
    def from_euler(cls, position, roll=0.0, pitch=0.0, yaw=0.0):
        return cls(
            np.asarray(position, dtype=np.float64),
            rotation_from_euler(roll, pitch, yaw),
        )

    @classmethod
    def mounted(cls, state, config=None):
        """Pose of the base-mounted camera for a robot state"""
        config = config or CameraConfig()
        base = state.rotation
        tilt = rotation_from_euler(0.0, np.radians(config.pitch_deg), 0.0)
        return cls(
            state.position + base.apply(np.asarray(config.mount, float)),
            base * tilt,
        )


@dataclass
class DepthImage:
    """
    Rendered depth frame

    Attributes
    ----------
    values : numpy.ndarray
        (height, width) depth along the optical axis in meters, row-major
    z_min, z_max : float
        Clip range, every value lies inside it
    step : int
        Control step at which the frame was rendered
    """

    values: np.ndarray
    z_min: float
    z_max: float
    step: int = 0

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def height(self):
        return self.values.shape[0]

    def normalized(self):
        """Values mapped linearly from the clip range onto [0, 1]"""
        return (self.values - self.z_min) / (self.z_max - self.z_min)


def _below(hf, points):
    ground = sample_heights(hf, points[:, 0], points[:, 1], clamp=True)
    return points[:, 2] <= ground


def render_depth(hf, camera_pose, config=None, step=0):
    """
    Raycast a depth image against a heightfield

    Each pixel ray is marched with a fixed step until the first sample at or
    below the terrain, then the crossing is refined by bisection. Rays that
    leave the clip range without a hit read ``z_max``.

    Parameters
    ----------
    hf : Heightfield
        Scene to render
    camera_pose : CameraPose
        World camera pose
    config : CameraConfig, optional
        Intrinsics and march parameters, by default CameraConfig()
    step : int, optional
        Control step stored on the image, by default 0

    Returns
    -------
    DepthImage
        Depth along the optical axis, clipped to [z_min, z_max]
    """
    config = config or CameraConfig()
    local = config.ray_directions().reshape(-1, 3)
    # Cosine to the optical axis turns ray length into axis depth
    cosine = local[:, 0]
    dirs = camera_pose.rotation.apply(local)
    origin = np.asarray(camera_pose.position, dtype=np.float64)

    n = len(dirs)
    depth = np.full(n, config.z_max)
    max_range = config.z_max / cosine
    lo = np.zeros(n)
    active = np.ones(n, dtype=bool)

    if _below(hf, origin[None, :])[0]:
        depth[:] = config.z_min
        active[:] = False

    t = 0.0
    while np.any(active):
        t += config.march_step
        idx = np.flatnonzero(active)
        hit = _below(hf, origin + t * dirs[idx])
        crossed = idx[hit]
        if len(crossed):
            a = lo[crossed]
            b = np.full(len(crossed), t)
            for _ in range(config.bisections):
                mid = 0.5 * (a + b)
                under = _below(hf, origin + mid[:, None] * dirs[crossed])
                b = np.where(under, mid, b)
                a = np.where(under, a, mid)
            depth[crossed] = b * cosine[crossed]
            active[crossed] = False
        lo[idx] = t
        active &= t < max_range

    depth = np.clip(depth, config.z_min, config.z_max)
    return DepthImage(
        depth.reshape(config.height, config.width),
        config.z_min,
        config.z_max,
        step,
    )


def write_depth(image, path):
    """
    Write a depth image in the DPTH text format

    The header is ``DPTH <w> <h> <zmin> <zmax>`` followed by one line of
    space separated depths in meters per image row.
    """
    with open(path, "w") as handle:
        handle.write(
            "DPTH {} {} {!r} {!r}\n".format(
                image.width, image.height, image.z_min, image.z_max
            )
        )
        for row in image.values:
            handle.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_depth(path):
    """Read a DPTH file back into a DepthImage"""
    with open(path) as handle:
        header = handle.readline().split()
        if len(header) != 5 or header[0] != "DPTH":
            raise ValueError("'{}' is not a DPTH file".format(path))
        width, height = int(header[1]), int(header[2])
        values = np.loadtxt(handle, dtype=np.float64, ndmin=2)
    if values.shape != (height, width):
        raise ValueError(
            "DPTH body has shape {}, header says {}x{}".format(
                values.shape, width, height
            )
        )
    return DepthImage(values, float(header[3]), float(header[4]))


class DepthPipeline:
    """
    Frame schedule and delay buffer between the renderer and the policy

    A frame is rendered every ``period`` control steps and becomes visible
    ``delay`` steps later. The policy sees the newest ``history`` delivered
    frames; the buffer starts filled with the frame of step 0.

    Attributes
    ----------
    config : CameraConfig
        Schedule parameters
    delay : int
        Delivery delay of the current episode
    frames : collections.deque
        Delivered frames, newest last

    Methods
    -------
    reset(render, rng=None, delay=None):
        Fill the buffer with a first frame and draw the episode delay

    observe(step, render):
        Advance the schedule to a control step and return the stack
    """

    def __init__(self, config=None):
        self.config = config or CameraConfig()
        self.delay = 0
        self.frames = deque(maxlen=self.config.history)
        self.pending = []

    def reset(self, render, rng=None, delay=None):
        if delay is None:
            rng = rng if rng is not None else np.random.default_rng()
            delay = int(rng.integers(0, self.config.max_delay + 1))
        if not 0 <= delay <= self.config.max_delay:
            raise ValueError(
                "Delay must lie in [0, {}], got {}".format(
                    self.config.max_delay, delay
                )
            )
        self.delay = delay
        self.pending = []
        first = render()
        first.step = 0
        self.frames.clear()
        self.frames.extend([first] * self.config.history)
        return self.stack()

    def observe(self, step, render):
        """
        Parameters
        ----------
        step : int
            Current control step, counted from the reset
        render : callable
            Returns a DepthImage of the current pose when called

        Returns
        -------
        numpy.ndarray
            (history, height, width) normalized depths, newest first
        """
        if step > 0 and step % self.config.period == 0:
            frame = render()
            frame.step = step
            self.pending.append((step + self.delay, frame))
        while self.pending and self.pending[0][0] <= step:
            self.frames.append(self.pending.pop(0)[1])
        return self.stack()

    def newest(self):
        return self.frames[-1]

    def stack(self):
        return np.stack([f.normalized() for f in reversed(self.frames)])
