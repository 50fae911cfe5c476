from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

# Per-cell surface labels
SURFACE = 0
WALL = 1
GAP = 2


@dataclass(frozen=True, eq=False)
class Heightfield:
    """
    Regular elevation grid describing a terrain lane

    Rows run along the world x axis and columns along the world y axis. The
    center of cell (i, j) sits at ``origin + (i, j) * cell_size``, so the
    covered world extent is ``rows * cell_size`` by ``cols * cell_size``
    (half a cell beyond the outermost centers on every side).

    Attributes
    ----------
    heights : numpy.ndarray
        (rows, cols) elevations in meters
    cell_size : float
        Grid spacing in meters
    origin : tuple of float
        World (x, y) of the center of cell (0, 0)
    labels : numpy.ndarray, optional
        (rows, cols) int8 surface labels (SURFACE, WALL or GAP), by default
        all SURFACE

    Methods
    -------
    world_to_grid(x, y):
        Fractional grid coordinates of world points

    grid_to_world(i, j):
        World coordinates of cell centers

    contains(x, y):
        Whether world points lie inside the covered extent
    """

    heights: np.ndarray
    cell_size: float
    origin: tuple = (0.0, 0.0)
    labels: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        heights = np.array(self.heights, dtype=np.float64)
        if heights.ndim != 2:
            raise ValueError(
                "Heights must be a 2D grid, got shape {}".format(
                    heights.shape
                )
            )
        if heights.shape[0] < 2 or heights.shape[1] < 2:
            raise ValueError(
                "Heightfield needs at least 2x2 cells, got {}x{}".format(
                    *heights.shape
                )
            )
        if not self.cell_size > 0:
            raise ValueError(
                "Cell size must be positive, got {}".format(self.cell_size)
            )
        if not np.all(np.isfinite(heights)):
            raise ValueError("Heights must all be finite")

        labels = self.labels
        if labels is None:
            labels = np.zeros(heights.shape, dtype=np.int8)
        else:
            labels = np.array(labels, dtype=np.int8)
            if labels.shape != heights.shape:
                raise ValueError(
                    "Labels shape {} does not match heights shape {}".format(
                        labels.shape, heights.shape
                    )
                )

        heights.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "cell_size", float(self.cell_size))
        object.__setattr__(
            self, "origin", (float(self.origin[0]), float(self.origin[1]))
        )

    def __repr__(self):
        return "Heightfield(rows={}, cols={}, cell_size={})".format(
            self.rows, self.cols, self.cell_size
        )

    @property
    def rows(self):
        return self.heights.shape[0]

    @property
    def cols(self):
        return self.heights.shape[1]

    @property
    def extent(self):
        """World (x_min, x_max, y_min, y_max) covered by the grid"""
        half = 0.5 * self.cell_size
        return (
            self.origin[0] - half,
            self.origin[0] + (self.rows - 0.5) * self.cell_size,
            self.origin[1] - half,
            self.origin[1] + (self.cols - 0.5) * self.cell_size,
        )

    def world_to_grid(self, x, y):
        """
        Fractional grid coordinates of world points

        Parameters
        ----------
        x, y : float or numpy.ndarray
            World coordinates in meters

        Returns
        -------
        tuple of numpy.ndarray
            Row and column coordinates (cell centers are integers)
        """
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        gi = (x - self.origin[0]) / self.cell_size
        gj = (y - self.origin[1]) / self.cell_size
        return gi, gj

    def grid_to_world(self, i, j):
        x = self.origin[0] + np.asarray(i, dtype=np.float64) * self.cell_size
        y = self.origin[1] + np.asarray(j, dtype=np.float64) * self.cell_size
        return x, y

    def contains(self, x, y):
        x_min, x_max, y_min, y_max = self.extent
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return (x >= x_min) & (x <= x_max) & (y >= y_min) & (y <= y_max)

    def clamp(self, x, y):
        """Clamp world points into the covered extent"""
        x_min, x_max, y_min, y_max = self.extent
        return (
            np.clip(np.asarray(x, dtype=np.float64), x_min, x_max),
            np.clip(np.asarray(y, dtype=np.float64), y_min, y_max),
        )

    def nearest_cell(self, x, y):
        """Integer (row, col) of the cell whose center is nearest"""
        gi, gj = self.world_to_grid(x, y)
        i = np.clip(np.rint(gi), 0, self.rows - 1).astype(np.int64)
        j = np.clip(np.rint(gj), 0, self.cols - 1).astype(np.int64)
        return i, j

    def label_at(self, x, y):
        i, j = self.nearest_cell(x, y)
        return self.labels[i, j]


@dataclass(frozen=True, eq=False)
class EdgeDistanceField:
    """
    Per-cell Euclidean distance to the nearest terrain edge cell

    Attributes
    ----------
    distances : numpy.ndarray
        Same shape as the parent heightfield, meters
    edges : numpy.ndarray
        Boolean mask of edge cells
    cell_size : float
        Grid spacing of the parent heightfield
    """

    distances: np.ndarray
    edges: np.ndarray
    cell_size: float

    def at_cell(self, i, j):
        return self.distances[i, j]

    def at(self, hf, x, y):
        """Distance at the cell nearest to a world point"""
        i, j = hf.nearest_cell(x, y)
        return self.distances[i, j]


# Relative tolerance for two neighbour steps to count as one slope
RAMP_RTOL = 1e-6


def _continues_slope(step, axis):
    """Steps equal to the previous or next step along an axis"""
    same = np.zeros(step.shape, dtype=bool)
    steps = np.moveaxis(step, axis, 0)
    marks = np.moveaxis(same, axis, 0)
    match = np.isclose(steps[1:], steps[:-1], rtol=RAMP_RTOL, atol=1e-9)
    marks[1:] |= match
    marks[:-1] |= match
    return same


def edge_mask(hf, h_edge):
    """
    Mark terrain edge cells

    A cell is an edge cell when it borders the grid boundary or when the
    absolute height difference to any 4-neighbor exceeds ``h_edge``. A
    neighbor step that repeats the step of an adjacent pair along the same
    axis does not count: it belongs to a constant-slope ramp such as an
    inclined wall band, not to a discontinuity. The rule reads heights
    only, so a lane gives the same mask before and after a file round trip.

    Parameters
    ----------
    hf : Heightfield
        Terrain to analyse
    h_edge : float
        Height-difference threshold in meters

    Returns
    -------
    numpy.ndarray
        Boolean (rows, cols) mask
    """
    if not h_edge > 0:
        raise ValueError("h_edge must be positive, got {}".format(h_edge))

    h = hf.heights
    edges = np.zeros(h.shape, dtype=bool)
    edges[0, :] = edges[-1, :] = True
    edges[:, 0] = edges[:, -1] = True

    # Vertical (row) neighbours
    step = np.diff(h, axis=0)
    jump = (np.abs(step) > h_edge) & ~_continues_slope(step, 0)
    edges[1:, :] |= jump
    edges[:-1, :] |= jump

    # Horizontal (column) neighbours
    step = np.diff(h, axis=1)
    jump = (np.abs(step) > h_edge) & ~_continues_slope(step, 1)
    edges[:, 1:] |= jump
    edges[:, :-1] |= jump
    return edges


def edge_distance(hf, h_edge=0.25):
    """
    Compute the edge-distance field of a heightfield

    Distances are center-to-center Euclidean distances to the nearest edge
    cell, evaluated as ``cell_size * sqrt(di**2 + dj**2)`` on the integer
    offset to that cell.

    Parameters
    ----------
    hf : Heightfield
        Terrain to analyse
    h_edge : float, optional
        Height-difference threshold, by default 0.25

    Returns
    -------
    EdgeDistanceField
        Distance field with the edge mask it was computed from
    """
    edges = edge_mask(hf, h_edge)
    _, (ii, jj) = ndimage.distance_transform_edt(
        ~edges, return_distances=True, return_indices=True
    )
    rows, cols = np.indices(edges.shape)
    di = (rows - ii).astype(np.float64)
    dj = (cols - jj).astype(np.float64)
    distances = hf.cell_size * np.sqrt(di * di + dj * dj)
    distances.setflags(write=False)
    edges.setflags(write=False)
    return EdgeDistanceField(distances, edges, hf.cell_size)


def sample_heights(hf, x, y, clamp=False):
    """
    Vectorised bilinear height lookup

    Parameters
    ----------
    hf : Heightfield
        Terrain to sample
    x, y : float or numpy.ndarray
        World coordinates in meters
    clamp : bool, optional
        Clamp queries into the extent instead of failing, by default False

    Returns
    -------
    numpy.ndarray
        Interpolated heights, same shape as the broadcast inputs
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if clamp:
        x, y = hf.clamp(x, y)
    elif not np.all(hf.contains(x, y)):
        raise ValueError(
            "Query point outside heightfield extent {}".format(hf.extent)
        )

    gi, gj = hf.world_to_grid(x, y)
    # The half-cell margin outside the outermost centers is flat
    gi = np.clip(gi, 0.0, hf.rows - 1.0)
    gj = np.clip(gj, 0.0, hf.cols - 1.0)
    i0 = np.minimum(np.floor(gi).astype(np.int64), hf.rows - 2)
    j0 = np.minimum(np.floor(gj).astype(np.int64), hf.cols - 2)
    fi = gi - i0
    fj = gj - j0

    h = hf.heights
    h00 = h[i0, j0]
    h10 = h[i0 + 1, j0]
    h01 = h[i0, j0 + 1]
    h11 = h[i0 + 1, j0 + 1]
    return (
        h00 * (1.0 - fi) * (1.0 - fj)
        + h10 * fi * (1.0 - fj)
        + h01 * (1.0 - fi) * fj
        + h11 * fi * fj
    )


def sample_height(hf, x, y):
    """
    Bilinear height at a single world point

    Parameters
    ----------
    hf : Heightfield
        Terrain to sample
    x, y : float
        World coordinates in meters

    Returns
    -------
    float
        Interpolated height, exact at cell centers
    """
    return float(sample_heights(hf, x, y))


def surface_normals(hf, x, y):
    """
    Unit surface normals of the bilinear surface at world points

    Parameters
    ----------
    hf : Heightfield
        Terrain to sample
    x, y : numpy.ndarray
        World coordinates, clamped into the extent

    Returns
    -------
    numpy.ndarray
        (..., 3) unit normals pointing up
    """
    x, y = hf.clamp(x, y)
    gi, gj = hf.world_to_grid(x, y)
    gi = np.clip(gi, 0.0, hf.rows - 1.0)
    gj = np.clip(gj, 0.0, hf.cols - 1.0)
    i0 = np.minimum(np.floor(gi).astype(np.int64), hf.rows - 2)
    j0 = np.minimum(np.floor(gj).astype(np.int64), hf.cols - 2)
    fi = gi - i0
    fj = gj - j0

    h = hf.heights
    h00 = h[i0, j0]
    h10 = h[i0 + 1, j0]
    h01 = h[i0, j0 + 1]
    h11 = h[i0 + 1, j0 + 1]
    dhdx = ((h10 - h00) * (1.0 - fj) + (h11 - h01) * fj) / hf.cell_size
    dhdy = ((h01 - h00) * (1.0 - fi) + (h11 - h10) * fi) / hf.cell_size

    normals = np.stack([-dhdx, -dhdy, np.ones_like(dhdx)], axis=-1)
    return normals / np.linalg.norm(normals, axis=-1, keepdims=True)


@dataclass(frozen=True)
class GridSpec:
    """
    Sample offsets of the local height grid H_t in the base yaw frame

    Attributes
    ----------
    x_points : tuple of float
        Forward offsets in meters (outer, slow-varying index)
    y_points : tuple of float
        Lateral offsets in meters (inner, fast-varying index)
    """

    x_points: tuple = (
        -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5,
    )
    y_points: tuple = (-0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6)

    @property
    def size(self):
        return len(self.x_points) * len(self.y_points)

    def offsets(self):
        """(n_x * n_y, 2) offsets in row-major (x outer, y inner) order"""
        gx, gy = np.meshgrid(
            np.asarray(self.x_points, dtype=np.float64),
            np.asarray(self.y_points, dtype=np.float64),
            indexing="ij",
        )
        return np.stack([gx.ravel(), gy.ravel()], axis=-1)


def sample_local_grid(hf, position, yaw, grid_spec=None):
    """
    Sample heights around the base relative to the base height

    Parameters
    ----------
    hf : Heightfield
        Terrain to sample
    position : array_like
        World base position (x, y, z)
    yaw : float
        Base yaw in radians
    grid_spec : GridSpec, optional
        Sample offsets in the base yaw frame, by default GridSpec()

    Returns
    -------
    numpy.ndarray
        Flat array of ``terrain height - base z`` in row-major order, with
        sample points clamped at the terrain bounds
    """
    grid_spec = grid_spec or GridSpec()
    offsets = grid_spec.offsets()
    c, s = np.cos(yaw), np.sin(yaw)
    wx = position[0] + c * offsets[:, 0] - s * offsets[:, 1]
    wy = position[1] + s * offsets[:, 0] + c * offsets[:, 1]
    return sample_heights(hf, wx, wy, clamp=True) - position[2]


def write_heightfield(hf, path):
    """
    Write a heightfield in the HFLD text format

    Parameters
    ----------
    hf : Heightfield
        Terrain to write
    path : str or pathlib.Path
        Destination file
    """
    with open(path, "w") as handle:
        handle.write(
            "HFLD {} {} {!r} {!r} {!r}\n".format(
                hf.rows, hf.cols, hf.cell_size, hf.origin[0], hf.origin[1]
            )
        )
        for row in hf.heights:
            handle.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_heightfield(path):
    """
    Read a heightfield from the HFLD text format (labels reset to SURFACE)

    Parameters
    ----------
    path : str or pathlib.Path
        Source file

    Returns
    -------
    Heightfield
        Parsed terrain
    """
    with open(path) as handle:
        header = handle.readline().split()
        if len(header) != 6 or header[0] != "HFLD":
            raise ValueError(
                "'{}' is not a HFLD file (header {})".format(path, header)
            )
        rows, cols = int(header[1]), int(header[2])
        cell_size = float(header[3])
        origin = (float(header[4]), float(header[5]))
        values = [line.split() for line in handle if line.strip()]

    if len(values) != rows or any(len(v) != cols for v in values):
        raise ValueError(
            "HFLD body does not match declared shape {}x{}".format(rows, cols)
        )
    heights = np.array(values, dtype=np.float64)
    return Heightfield(heights, cell_size, origin)
