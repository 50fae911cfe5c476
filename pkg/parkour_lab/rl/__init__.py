from .rewards import (
    REWARD_TERMS,
    RewardConfig,
    RewardGroups,
    Transition,
    compute_rewards,
)
from .advantages import gae, mix_advantages
from .pas import PasConfig, PasSchedule, pas_select
from .curriculum import Curriculum, CurriculumConfig, next_level
from .variants import SINGLE_CRITIC_GROUP, VARIANTS, Variant, get_variant
from .env import EnvObservation, LaneConfig, ParkourEnv, StepResult, load_lane
from .rollouts import (
    THREADS_VARIABLE,
    EnvPool,
    EpisodeRecord,
    RolloutBatch,
    RolloutCollector,
    act,
    resolve_threads,
)
from .ppo import (
    PPOConfig,
    batch_losses,
    clipped_surrogate,
    compute_advantages,
    estimator_losses,
    mse,
    ppo_update,
)
