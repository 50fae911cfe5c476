from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from .heightfield import GAP, SURFACE, WALL, Heightfield


class Family(str, Enum):
    """Terrain families"""

    WALL_ASSISTED_GAP = "WallAssistedGap"
    SURMOUNTING = "Surmounting"
    STEPPING_STONES = "SteppingStones"
    FLAT = "Flat"

    @classmethod
    def parse(cls, name):
        """
        Look up a family by its value, case-insensitively

        Parameters
        ----------
        name : str or Family
            Family name such as 'SteppingStones'

        Returns
        -------
        Family
            The matching family
        """
        if isinstance(name, cls):
            return name
        for family in cls:
            if family.value.lower() == str(name).lower():
                return family
        raise ValueError(
            "'{}' is not a terrain family. Try {}".format(
                name, ", ".join(f.value for f in cls)
            )
        )


FAMILY_INDEX = {family: index for index, family in enumerate(Family)}


@dataclass(frozen=True)
class TerrainConfig:
    """
    Terrain generation parameters

    Every ``*_range`` holds the (level 0, level L-1) values; intermediate
    levels interpolate linearly between them.
    """

    levels: int = 10
    cell_size: float = 0.05
    start_pad: float = 2.0
    finish_pad: float = 2.0
    roughness: float = 0.03
    h_edge: float = 0.25
    wall_band_width: float = 0.4
    wall_offset: float = 0.45
    wall_margin: float = 0.5
    feature_spacing: tuple = (1.5, 2.5)
    gap_width_range: tuple = (0.3, 1.2)
    gap_depth: float = 1.0
    inclination_range: tuple = (50.0, 80.0)
    platform_height_range: tuple = (0.2, 0.7)
    platform_length: float = 1.5
    stone_size_range: tuple = (0.8, 0.5)
    stone_height_range: tuple = (0.0, 0.4)
    stone_spacing_range: tuple = (0.1, 0.4)
    stone_jitter: float = 0.15
    stone_pit_depth: float = 1.0


@dataclass(frozen=True)
class TerrainSpec:
    """
    Identifies one generated lane

    Attributes
    ----------
    family : Family
        Terrain family
    level : int
        Curriculum index in [0, levels - 1]
    seed : int
        Randomness seed
    lane_length : float, optional
        Lane length along +x in meters, by default 20.0
    lane_width : float, optional
        Lane width in meters, by default 4.0
    inclination_deg : float, optional
        Wall inclination override (evaluation presets), by default None
    gap_width : float, optional
        Gap width override (evaluation presets), by default None
    """

    family: Family
    level: int
    seed: int
    lane_length: float = 20.0
    lane_width: float = 4.0
    inclination_deg: Optional[float] = None
    gap_width: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))

    @property
    def key(self):
        return (
            self.family.value,
            self.level,
            self.seed,
            self.lane_length,
            self.lane_width,
            self.inclination_deg,
            self.gap_width,
        )


@dataclass(frozen=True)
class FeatureParams:
    """Scalar difficulty parameters of one curriculum level"""

    gap_width: float
    inclination_deg: float
    platform_height: float
    stone_size: float
    stone_height_variation: float
    stone_spacing: float


def _lerp(value_range, t):
    low, high = value_range
    return float(low + (high - low) * t)


def difficulty_parameters(spec, config=None):
    """
    Map a curriculum level to its feature parameters

    Parameters
    ----------
    spec : TerrainSpec
        Lane identity (level and optional overrides)
    config : TerrainConfig, optional
        Parameter ranges, by default TerrainConfig()

    Returns
    -------
    FeatureParams
        Parameters for the requested level
    """
    config = config or TerrainConfig()
    if not 0 <= spec.level < config.levels:
        raise ValueError(
            "Level {} is out of range [0, {}]".format(
                spec.level, config.levels - 1
            )
        )
    t = spec.level / (config.levels - 1) if config.levels > 1 else 0.0

    params = FeatureParams(
        gap_width=_lerp(config.gap_width_range, t),
        inclination_deg=_lerp(config.inclination_range, t),
        platform_height=_lerp(config.platform_height_range, t),
        stone_size=_lerp(config.stone_size_range, t),
        stone_height_variation=_lerp(config.stone_height_range, t),
        stone_spacing=_lerp(config.stone_spacing_range, t),
    )
    if spec.inclination_deg is not None:
        params = replace(params, inclination_deg=float(spec.inclination_deg))
    if spec.gap_width is not None:
        params = replace(params, gap_width=float(spec.gap_width))
    return params


def _lane_grid(spec, config):
    cs = config.cell_size
    rows = int(round(spec.lane_length / cs))
    cols = int(round(spec.lane_width / cs))
    origin = (0.5 * cs, -0.5 * spec.lane_width + 0.5 * cs)
    xs = origin[0] + cs * np.arange(rows)
    ys = origin[1] + cs * np.arange(cols)
    return origin, np.meshgrid(xs, ys, indexing="ij")


def _check_lane(spec, config, needed_length, needed_half_width=0.0):
    usable = spec.lane_length - config.start_pad - config.finish_pad
    if usable < needed_length:
        raise ValueError(
            "Lane length {} m leaves {:.2f} m between the pads, {} needs "
            "{:.2f} m".format(
                spec.lane_length, usable, spec.family.value, needed_length
            )
        )
    if 0.5 * spec.lane_width < needed_half_width:
        raise ValueError(
            "Lane width {} m is too narrow for {} (needs {:.2f} m)".format(
                spec.lane_width, spec.family.value, 2 * needed_half_width
            )
        )


def _add_wall(h, labels, X, Y, x_from, x_to, side, inclination_deg, config):
    """Carve a lateral wall band rising away from the lane centerline"""
    d = side * Y - config.wall_offset
    span = (X >= x_from) & (X < x_to)
    band = span & (d >= 0.0) & (d < config.wall_band_width)
    behind = span & (d >= config.wall_band_width)
    slope = np.tan(np.radians(inclination_deg))

    h[band] = d[band] * slope
    labels[band] = WALL
    h[behind] = config.wall_band_width * slope
    labels[behind] = SURFACE


def _wall_assisted_gap(spec, config, params, rng, X, Y, h, labels):
    g = params.gap_width
    _check_lane(
        spec,
        config,
        g + 2 * config.wall_margin + config.feature_spacing[1],
        config.wall_offset + config.wall_band_width + config.cell_size,
    )
    end = spec.lane_length - config.finish_pad
    x = config.start_pad + rng.uniform(*config.feature_spacing)
    while x + g + config.wall_margin <= end:
        side = rng.choice([-1.0, 1.0])
        pit = (X >= x) & (X < x + g)
        h[pit] = -config.gap_depth
        labels[pit] = GAP
        _add_wall(
            h,
            labels,
            X,
            Y,
            x - config.wall_margin,
            x + g + config.wall_margin,
            side,
            params.inclination_deg,
            config,
        )
        x += g + config.wall_margin + rng.uniform(*config.feature_spacing)


def _surmounting(spec, config, params, rng, X, Y, h, labels):
    length = config.platform_length
    _check_lane(
        spec,
        config,
        length + config.feature_spacing[1],
        config.wall_offset + config.wall_band_width + config.cell_size,
    )
    end = spec.lane_length - config.finish_pad
    x = config.start_pad + rng.uniform(*config.feature_spacing)
    while x + length <= end:
        side = rng.choice([-1.0, 1.0])
        platform = (X >= x) & (X < x + length)
        h[platform] = params.platform_height
        # Kick wall beside the leading edge
        _add_wall(
            h,
            labels,
            X,
            Y,
            x - 2 * config.wall_margin,
            x + config.wall_margin,
            side,
            params.inclination_deg,
            config,
        )
        x += length + rng.uniform(*config.feature_spacing)


def _stepping_stones(spec, config, params, rng, X, Y, h, labels):
    size = params.stone_size
    pitch = size + params.stone_spacing
    _check_lane(spec, config, pitch, 0.5 * size)

    start = config.start_pad
    end = spec.lane_length - config.finish_pad
    region = (X >= start) & (X < end)
    h[region] = -config.stone_pit_depth
    labels[region] = GAP

    n_across = max(1, int(spec.lane_width // pitch))
    centers_y = (np.arange(n_across) - 0.5 * (n_across - 1)) * pitch
    x_center = start + params.stone_spacing + 0.5 * size
    while x_center + 0.5 * size <= end:
        for y_center in centers_y:
            shrink = 1.0 - rng.uniform(0.0, config.stone_jitter, size=2)
            half_x, half_y = 0.5 * size * shrink
            top = rng.uniform(-0.5, 0.5) * params.stone_height_variation
            stone = (
                (np.abs(X - x_center) < half_x)
                & (np.abs(Y - y_center) < half_y)
            )
            h[stone] = top
            labels[stone] = SURFACE
        x_center += pitch


_BUILDERS = {
    Family.WALL_ASSISTED_GAP: _wall_assisted_gap,
    Family.SURMOUNTING: _surmounting,
    Family.STEPPING_STONES: _stepping_stones,
    Family.FLAT: None,
}


def generate(spec, config=None):
    """
    Generate the heightfield of a terrain lane

    The lane runs along +x from x = 0 to ``spec.lane_length`` and is
    centred on y = 0. Start and finish pads stay flat; horizontal surfaces
    receive uniform roughness noise while wall bands stay smooth.

    Parameters
    ----------
    spec : TerrainSpec
        Family, level and seed of the lane
    config : TerrainConfig, optional
        Generation parameters, by default TerrainConfig()

    Returns
    -------
    Heightfield
        Generated terrain with surface labels
    """
    config = config or TerrainConfig()
    params = difficulty_parameters(spec, config)
    if spec.lane_length < config.start_pad + config.finish_pad:
        raise ValueError(
            "Lane length {} m cannot hold the start and finish pads".format(
                spec.lane_length
            )
        )
    if spec.seed < 0:
        raise ValueError("Seed must be non-negative, got {}".format(spec.seed))

    origin, (X, Y) = _lane_grid(spec, config)
    h = np.zeros(X.shape)
    labels = np.full(X.shape, SURFACE, dtype=np.int8)
    rng = np.random.default_rng(
        [spec.seed, FAMILY_INDEX[spec.family], spec.level]
    )

    builder = _BUILDERS[spec.family]
    if builder is not None:
        builder(spec, config, params, rng, X, Y, h, labels)

    noise = rng.uniform(-config.roughness, config.roughness, size=h.shape)
    rough = labels != WALL
    h[rough] += noise[rough]
    return Heightfield(h, config.cell_size, origin, labels)


# Evaluation presets: name -> (family, level or None for the top level,
# inclination override, gap override)
PRESETS = {
    "flat": (Family.FLAT, 0, None, None),
    "wall_gap_60": (Family.WALL_ASSISTED_GAP, None, 60.0, 1.2),
    "wall_gap_80": (Family.WALL_ASSISTED_GAP, None, 80.0, 1.2),
    "surmounting": (Family.SURMOUNTING, None, None, None),
    "stepping_stones": (Family.STEPPING_STONES, None, None, None),
    "stepping_stones_l2": (Family.STEPPING_STONES, 2, None, None),
}


def preset_spec(name, seed, config=None, lane_length=20.0, lane_width=4.0):
    """
    Build the terrain spec of a named evaluation preset

    Parameters
    ----------
    name : str
        One of PRESETS
    seed : int
        Terrain seed
    config : TerrainConfig, optional
        Used to resolve the top curriculum level, by default TerrainConfig()

    Returns
    -------
    TerrainSpec
        Spec with the preset's level and overrides
    """
    if name not in PRESETS:
        raise ValueError(
            "Unknown terrain preset '{}'. Try {}".format(
                name, ", ".join(PRESETS)
            )
        )
    config = config or TerrainConfig()
    family, level, inclination, gap = PRESETS[name]
    if level is None:
        level = config.levels - 1
    return TerrainSpec(
        family,
        min(level, config.levels - 1),
        seed,
        lane_length=lane_length,
        lane_width=lane_width,
        inclination_deg=inclination,
        gap_width=gap,
    )
