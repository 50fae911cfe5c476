from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class PasConfig:
    """
    Probability annealing selection settings

    Attributes
    ----------
    anneal_fraction : float
        Share of the training iterations over which p anneals to 1
    fixed_probability : float, optional
        Hold p at this value instead of annealing, by default None
    """

    anneal_fraction: float = 0.6
    fixed_probability: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.anneal_fraction <= 1.0:
            raise ValueError(
                "anneal_fraction must lie in [0, 1], got {}".format(
                    self.anneal_fraction
                )
            )
        p = self.fixed_probability
        if p is not None and not 0.0 <= p <= 1.0:
            raise ValueError(
                "fixed_probability must lie in [0, 1], got {}".format(p)
            )


class PasSchedule:
    """
    Cosine schedule of the probability of feeding the estimated prior

    ``p_t = 1 - cos(pi t / 2T)`` for ``t <= T`` and 1 afterwards.

    Attributes
    ----------
    total : int
        Annealing length T in iterations
    step : int
        Current iteration t
    fixed : float or None
        Constant probability overriding the schedule
    """

    def __init__(self, total, step=0, fixed=None):
        if total < 0 or step < 0:
            raise ValueError(
                "Schedule length and step must be non-negative, got {} and "
                "{}".format(total, step)
            )
        self.total = int(total)
        self.step = int(step)
        self.fixed = fixed

    @classmethod
    def from_config(cls, config, iterations):
        total = int(round(config.anneal_fraction * iterations))
        return cls(total, fixed=config.fixed_probability)

    def __repr__(self):
        return "PasSchedule(total={}, step={}, p={:.4f})".format(
            self.total, self.step, self.probability()
        )

    def probability(self, step=None):
        if self.fixed is not None:
            return float(self.fixed)
        t = self.step if step is None else step
        if self.total == 0 or t >= self.total:
            return 1.0
        return float(1.0 - np.cos(0.5 * np.pi * t / self.total))

    def advance(self):
        self.step += 1
        return self


def pas_select(truth, estimate, schedule, rng):
    """
    Choose between the ground-truth and the estimated prior per row

    One uniform draw per row: the estimate is used where ``u < p_t``.

    Parameters
    ----------
    truth, estimate : array_like
        (N, k) priors, or (k,) for a single environment
    schedule : PasSchedule
        Provides p_t
    rng : numpy.random.Generator
        Source of the draws

    Returns
    -------
    tuple
        The selected priors and a boolean flag per row, True where the
        estimate was used
    """
    truth = np.asarray(truth, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if truth.shape != estimate.shape:
        raise ValueError(
            "Truth {} and estimate {} priors differ in shape".format(
                truth.shape, estimate.shape
            )
        )
    single = truth.ndim == 1
    rows = 1 if single else truth.shape[0]
    flags = rng.uniform(size=rows) < schedule.probability()
    if single:
        return (estimate if flags[0] else truth), bool(flags[0])
    return np.where(flags[:, None], estimate, truth), flags
