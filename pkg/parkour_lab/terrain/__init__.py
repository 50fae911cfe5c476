from .heightfield import (
    GAP,
    SURFACE,
    WALL,
    EdgeDistanceField,
    GridSpec,
    Heightfield,
    edge_distance,
    edge_mask,
    read_heightfield,
    sample_height,
    sample_heights,
    sample_local_grid,
    surface_normals,
    write_heightfield,
)
from .generators import (
    PRESETS,
    Family,
    FeatureParams,
    TerrainConfig,
    TerrainSpec,
    difficulty_parameters,
    generate,
    preset_spec,
)
