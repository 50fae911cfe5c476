from dataclasses import dataclass

import numpy as np

from ..sim import Outcome


@dataclass(frozen=True)
class CurriculumConfig:
    """
    Terrain level promotion and demotion

    Attributes
    ----------
    levels : int
        Number of levels L
    initial_level : int
        Level of every environment at the start of training
    demote_after : int
        Consecutive falls at one level that trigger a demotion
    enabled : bool
        Keep every environment at its initial level when False
    """

    levels: int = 10
    initial_level: int = 0
    demote_after: int = 2
    enabled: bool = True

    def __post_init__(self):
        if not 0 <= self.initial_level < self.levels:
            raise ValueError(
                "Initial level {} is out of range [0, {}]".format(
                    self.initial_level, self.levels - 1
                )
            )
        if self.demote_after < 1:
            raise ValueError(
                "demote_after must be at least 1, got {}".format(
                    self.demote_after
                )
            )


def next_level(level, streak, outcome, config):
    """
    One curriculum transition

    A finish promotes, ``demote_after`` consecutive falls (collisions
    count as falls) demote and a timeout breaks the fall streak. Levels
    are clamped to [0, L - 1].

    Returns
    -------
    tuple of int
        New level and new fall streak
    """
    outcome = Outcome(outcome)
    if not config.enabled:
        return level, 0
    if outcome is Outcome.FINISHED:
        return min(level + 1, config.levels - 1), 0
    if outcome in (Outcome.FELL, Outcome.COLLIDED):
        streak += 1
        if streak >= config.demote_after:
            return max(level - 1, 0), 0
        return level, streak
    return level, 0


class Curriculum:
    """
    Per-environment levels and fall streaks

    Methods
    -------
    step(index, outcome):
        Apply the outcome of one finished episode and return the new level
    """

    def __init__(self, n_envs, config=None):
        self.config = config or CurriculumConfig()
        self.levels = np.full(n_envs, self.config.initial_level, dtype=int)
        self.streaks = np.zeros(n_envs, dtype=int)

    def step(self, index, outcome):
        level, streak = next_level(
            int(self.levels[index]),
            int(self.streaks[index]),
            outcome,
            self.config,
        )
        self.levels[index] = level
        self.streaks[index] = streak
        return level

    def mean_level(self):
        return float(np.mean(self.levels))

    def state_dict(self):
        return {"levels": self.levels.copy(), "streaks": self.streaks.copy()}

    def load_state_dict(self, state):
        self.levels = np.array(state["levels"], dtype=int)
        self.streaks = np.array(state["streaks"], dtype=int)
