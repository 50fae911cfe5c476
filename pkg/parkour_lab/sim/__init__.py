from .robot import (
    FOOT_NAMES,
    BodyConfig,
    RobotState,
    euler_from_rotation,
    foot_targets,
    rotation_from_euler,
)
from .dynamics import ContactConfig, ContactReport, mechanical_energy, step
from .episode import (
    EpisodeConfig,
    Outcome,
    check_termination,
    finish_x,
    reset,
)
from .trajectory import TrajectoryRecorder, read_traj, write_traj
