import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .terrain import SURFACE, WALL, sample_height


@dataclass(frozen=True)
class FootholdConfig:
    """
    Foothold generation and progression parameters

    Attributes
    ----------
    interval : float
        Spacing of flat candidates along the lane, meters
    d_safe : float
        Minimum edge distance of an accepted foothold, meters
    search_radius : float
        Snapping radius around each candidate, meters
    eps : float
        Arrival threshold on both front-foot distances, meters
    overfly : float
        Forward distance past a foothold that also advances the cursor
    start_x : float
        Robot start x; the first candidate sits one interval ahead
    end_margin : float
        No candidates closer than this to the lane end, meters
    planar_distance : bool
        Use horizontal instead of 3D foot distances
    """

    interval: float = 1.0
    d_safe: float = 0.1
    search_radius: float = 0.5
    eps: float = 0.2
    overfly: float = 0.3
    start_x: float = 1.0
    end_margin: float = 0.5
    planar_distance: bool = False


def wrap_angle(angle):
    """
    Wrap angles into (-pi, pi]

    Parameters
    ----------
    angle : float or numpy.ndarray
        Angle in radians

    Returns
    -------
    float or numpy.ndarray
        Equivalent angle in (-pi, pi]
    """
    angle = np.asarray(angle, dtype=np.float64)
    wrapped = np.pi - np.mod(np.pi - angle, 2 * np.pi)
    wrapped = np.where(wrapped <= -np.pi, wrapped + 2 * np.pi, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class PolarPrior:
    """
    Egocentric polar foothold prior

    Attributes
    ----------
    d_left, d_right : float
        Distances from the left and right front feet to the current
        foothold, meters
    psi : float
        Heading error toward the current foothold, radians
    psi_next : float
        Heading error toward the following foothold, radians
    """

    d_left: float
    d_right: float
    psi: float
    psi_next: float

    def as_array(self):
        return np.array(
            [self.d_left, self.d_right, self.psi, self.psi_next],
            dtype=np.float64,
        )


class FootholdTrack:
    """
    Ordered footholds along a lane with a progression cursor

    Attributes
    ----------
    points : numpy.ndarray
        (N + 1, 3) world-frame footholds with strictly increasing x
    on_wall : numpy.ndarray
        Boolean flag per foothold, True at wall band centers
    cursor : int
        Index of the current expected foothold, in [0, N]
    completed : bool
        Set once the last foothold has been reached or passed
    direction : numpy.ndarray
        Unit commanded direction of the lane in the world xy plane

    Methods
    -------
    current():
        The foothold at the cursor

    following():
        The foothold after the cursor (the last one at the end)

    copy():
        Independent copy sharing no mutable state
    """

    def __init__(self, points, on_wall, direction=(1.0, 0.0)):
        points = np.array(points, dtype=np.float64).reshape(-1, 3)
        if len(points) == 0:
            raise ValueError("A foothold track needs at least one point")
        direction = np.asarray(direction, dtype=np.float64)
        direction = direction / np.linalg.norm(direction)
        progress = points[:, :2] @ direction
        if np.any(np.diff(progress) <= 0):
            raise ValueError(
                "Footholds must strictly increase along the lane direction"
            )
        self.points = points
        self.on_wall = np.array(on_wall, dtype=bool)
        self.direction = direction
        self.cursor = 0
        self.completed = False
        self.points.setflags(write=False)
        self.on_wall.setflags(write=False)

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return "FootholdTrack(points={}, cursor={}, on_wall={})".format(
            len(self), self.cursor, int(self.on_wall.sum())
        )

    @property
    def last(self):
        return len(self.points) - 1

    def current(self):
        return self.points[self.cursor]

    def following(self):
        return self.points[min(self.cursor + 1, self.last)]

    def copy(self):
        track = FootholdTrack(self.points, self.on_wall, self.direction)
        track.cursor = self.cursor
        track.completed = self.completed
        return track

    def reset(self, base_position=None):
        """Point the cursor at the first foothold ahead of the base"""
        self.completed = False
        self.cursor = 0
        if base_position is not None:
            base = np.asarray(base_position, dtype=np.float64)[:2]
            ahead = (self.points[:, :2] - base) @ self.direction > 0
            if np.any(ahead):
                self.cursor = int(np.argmax(ahead))
            else:
                self.cursor = self.last
        return self


def _snap(hf, edf, x, y, d_safe, radius, allowed_label):
    """Nearest cell center with enough edge clearance, or None"""
    cs = hf.cell_size
    reach = int(np.ceil(radius / cs))
    ci, cj = hf.nearest_cell(x, y)
    i0, i1 = max(0, ci - reach), min(hf.rows, ci + reach + 1)
    j0, j1 = max(0, cj - reach), min(hf.cols, cj + reach + 1)

    ii, jj = np.mgrid[i0:i1, j0:j1]
    wx, wy = hf.grid_to_world(ii, jj)
    dist = np.hypot(wx - x, wy - y)
    valid = (
        (dist <= radius)
        & (edf.distances[i0:i1, j0:j1] > d_safe)
        & (hf.labels[i0:i1, j0:j1] == allowed_label)
    )
    if not np.any(valid):
        return None
    k = np.argmin(np.where(valid, dist, np.inf))
    return float(wx.flat[k]), float(wy.flat[k])


def wall_band_centers(hf):
    """
    World (x, y) centroids of the connected wall bands of a heightfield

    Parameters
    ----------
    hf : Heightfield
        Terrain with surface labels

    Returns
    -------
    list of tuple
        One centroid per wall band, sorted along x
    """
    walls = hf.labels == WALL
    components, count = ndimage.label(walls)
    if count == 0:
        return []
    centroids = ndimage.center_of_mass(
        walls, components, range(1, count + 1)
    )
    centers = [hf.grid_to_world(gi, gj) for gi, gj in centroids]
    return sorted((float(x), float(y)) for x, y in centers)


def build_track(hf, edf, spec, d_safe=None, config=None):
    """
    Generate, filter and order the footholds of a lane

    Flat candidates sit every ``interval`` meters on the lane centerline
    and one candidate sits at the center of each wall band. Each candidate
    snaps to the nearest cell center of its own surface kind whose edge
    distance exceeds ``d_safe`` within the search radius; candidates that
    cannot snap are dropped.

    Parameters
    ----------
    hf : Heightfield
        Lane terrain
    edf : EdgeDistanceField
        Edge distances of the same terrain
    spec : TerrainSpec
        Lane identity (length and width)
    d_safe : float, optional
        Edge clearance, by default ``config.d_safe``
    config : FootholdConfig, optional
        Generation parameters, by default FootholdConfig()

    Returns
    -------
    FootholdTrack
        Footholds ordered along +x with the cursor at 0
    """
    config = config or FootholdConfig()
    d_safe = config.d_safe if d_safe is None else d_safe
    if edf.distances.shape != hf.heights.shape:
        raise ValueError(
            "Edge distance shape {} does not match terrain shape {}".format(
                edf.distances.shape, hf.heights.shape
            )
        )

    candidates = []
    x = config.start_x + config.interval
    while x <= spec.lane_length - config.end_margin + 1e-9:
        candidates.append((x, 0.0, False))
        x += config.interval
    for cx, cy in wall_band_centers(hf):
        candidates.append((cx, cy, True))

    accepted = []
    for x, y, on_wall in candidates:
        label = WALL if on_wall else SURFACE
        snapped = _snap(hf, edf, x, y, d_safe, config.search_radius, label)
        if snapped is None:
            if on_wall:
                warnings.warn(
                    "Wall band at ({:.2f}, {:.2f}) has no cell with edge "
                    "distance above {}".format(x, y, d_safe)
                )
            continue
        accepted.append((snapped[0], snapped[1], on_wall))

    # Wall candidates win ties so every band keeps its foothold
    accepted.sort(key=lambda item: (item[0], not item[2]))
    points, flags = [], []
    for x, y, on_wall in accepted:
        if points and x <= points[-1][0]:
            continue
        points.append((x, y, sample_height(hf, x, y)))
        flags.append(on_wall)

    if not points:
        raise RuntimeError(
            "No foothold survived the edge filter on {} level {} seed {} "
            "(d_safe={})".format(
                spec.family.value, spec.level, spec.seed, d_safe
            )
        )
    return FootholdTrack(points, flags)


def _distances(state, target, planar):
    left, right = state.front_feet()
    if planar:
        return (
            float(np.linalg.norm(left[:2] - target[:2])),
            float(np.linalg.norm(right[:2] - target[:2])),
        )
    return (
        float(np.linalg.norm(left - target)),
        float(np.linalg.norm(right - target)),
    )


def _bearing(state, target):
    delta = target[:2] - np.asarray(state.position, dtype=np.float64)[:2]
    return wrap_angle(np.arctan2(delta[1], delta[0]) - state.yaw)


def polar_prior(state, track, planar=False):
    """
    Egocentric polar foothold prior of a robot state

    Parameters
    ----------
    state : RobotState
        Provides ``position``, ``yaw`` and ``front_feet()`` in world frame
    track : FootholdTrack
        Footholds with the current cursor
    planar : bool, optional
        Horizontal instead of 3D foot distances, by default False

    Returns
    -------
    PolarPrior
        Foot distances and heading errors to the current and next footholds
    """
    target = track.current()
    d_left, d_right = _distances(state, target, planar)
    return PolarPrior(
        d_left,
        d_right,
        _bearing(state, target),
        _bearing(state, track.following()),
    )


def advance_cursor(state, track, eps=0.2, overfly=0.3, planar=False):
    """
    Move the cursor past reached or overflown footholds

    The cursor advances when both front feet are within ``eps`` of the
    current foothold (an arrival) or when the base has passed it by more
    than ``overfly`` along the lane direction. At the last foothold the
    track is marked completed instead.

    Parameters
    ----------
    state : RobotState
        Current robot state
    track : FootholdTrack
        Track to update in place
    eps : float, optional
        Arrival threshold, by default 0.2
    overfly : float, optional
        Overfly threshold, by default 0.3
    planar : bool, optional
        Horizontal instead of 3D foot distances, by default False

    Returns
    -------
    tuple
        The updated track and the arrival flag
    """
    if track.completed:
        return track, False

    target = track.current()
    d_left, d_right = _distances(state, target, planar)
    arrived = d_left < eps and d_right < eps
    base = np.asarray(state.position, dtype=np.float64)[:2]
    passed = float((base - target[:2]) @ track.direction) > overfly

    if arrived or passed:
        if track.cursor < track.last:
            track.cursor += 1
        else:
            track.completed = True
    return track, arrived


def write_track(track, path):
    """
    Write footholds as ``x y z on_wall`` lines

    Parameters
    ----------
    track : FootholdTrack
        Track to dump
    path : str or pathlib.Path
        Destination file
    """
    with open(path, "w") as handle:
        for (x, y, z), on_wall in zip(track.points, track.on_wall):
            handle.write(
                "{!r} {!r} {!r} {}\n".format(
                    float(x), float(y), float(z), int(on_wall)
                )
            )
