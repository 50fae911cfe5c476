from .depth import (
    CameraConfig,
    CameraPose,
    DepthImage,
    DepthPipeline,
    read_depth,
    render_depth,
    write_depth,
)
from .observations import (
    OBSERVATION_LAYOUT,
    OBSERVATION_SIZE,
    OBSERVATION_SLICES,
    PRIOR_SIZES,
    PRIVILEGED_LAYOUT,
    PRIVILEGED_SIZE,
    NoiseConfig,
    PrivilegedObservation,
    ProprioHistory,
    assemble_observation,
    prior_features,
    privileged_observation,
    split_observation,
)
