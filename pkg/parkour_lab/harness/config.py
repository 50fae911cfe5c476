import ast
import configparser
import dataclasses
import hashlib
import io
from dataclasses import dataclass, field

from ..foothold import FootholdConfig
from ..nn import NetworkConfig
from ..rl import (
    VARIANTS,
    CurriculumConfig,
    LaneConfig,
    PasConfig,
    PPOConfig,
    RewardConfig,
)
from ..sensors import CameraConfig, NoiseConfig
from ..sim import BodyConfig, ContactConfig, EpisodeConfig
from ..terrain import TerrainConfig


@dataclass(frozen=True)
class RunSettings:
    """
    Run-level settings, the ``[run]`` section

    Attributes
    ----------
    seed : int
        Seed of the networks, environments and minibatch shuffling
    out : str
        Output directory for metrics and checkpoints
    n_envs : int
        Parallel environments
    iterations : int
        Training iterations (collect plus update)
    checkpoint_every : int
        Iterations between checkpoints; one is also written at exit
    deterministic : bool
        Step environments on one thread regardless of ``threads``
    float64 : bool
        Train with 64-bit tensors
    variant : str
        Ablation variant name
    threads : int
        Worker threads, 0 for one per CPU (capped by PUMA_LAB_THREADS)
    eval_trials : int
        Episodes per preset in evaluations
    """

    seed: int = 0
    out: str = "runs/default"
    n_envs: int = 64
    iterations: int = 500
    checkpoint_every: int = 50
    deterministic: bool = True
    float64: bool = False
    variant: str = "full"
    threads: int = 1
    eval_trials: int = 100

    def __post_init__(self):
        if self.n_envs < 1 or self.iterations < 0:
            raise ValueError(
                "Need n_envs >= 1 and iterations >= 0, got {} and {}".format(
                    self.n_envs, self.iterations
                )
            )
        if self.checkpoint_every < 1 or self.eval_trials < 1:
            raise ValueError(
                "checkpoint_every and eval_trials must be positive, got {} "
                "and {}".format(self.checkpoint_every, self.eval_trials)
            )
        if self.variant not in VARIANTS:
            raise ValueError(
                "Unknown variant '{}'. Try {}".format(
                    self.variant, ", ".join(VARIANTS)
                )
            )


@dataclass(frozen=True)
class RunConfig:
    """
    Every tunable of a run, one section per module

    Methods
    -------
    to_text() / from_text(text):
        INI serialization; from_text(cfg.to_text()) == cfg

    save(path) / load(path):
        The same through a file
    """

    run: RunSettings = field(default_factory=RunSettings)
    terrain: TerrainConfig = field(default_factory=TerrainConfig)
    lane: LaneConfig = field(default_factory=LaneConfig)
    foothold: FootholdConfig = field(default_factory=FootholdConfig)
    body: BodyConfig = field(default_factory=BodyConfig)
    contact: ContactConfig = field(default_factory=ContactConfig)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    ppo: PPOConfig = field(default_factory=PPOConfig)
    pas: PasConfig = field(default_factory=PasConfig)
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)

    @property
    def sections(self):
        return [f.name for f in dataclasses.fields(self)]

    def replace(self, **sections):
        """
        Copy with fields of some sections changed

        Parameters
        ----------
        **sections : dict
            Section name -> {field: value}
        """
        changes = {}
        for name, values in sections.items():
            if name not in self.sections:
                raise ValueError("Unknown config section [{}]".format(name))
            changes[name] = dataclasses.replace(getattr(self, name), **values)
        return dataclasses.replace(self, **changes)

    def to_text(self):
        parser = configparser.ConfigParser(interpolation=None)
        for name in self.sections:
            section = getattr(self, name)
            parser[name] = {
                f.name: _format(getattr(section, f.name))
                for f in dataclasses.fields(section)
            }
        buffer = io.StringIO()
        parser.write(buffer)
        return buffer.getvalue()

    @classmethod
    def from_text(cls, text):
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as error:
            raise ValueError("Malformed config: {}".format(error)) from error

        defaults = cls()
        unknown = sorted(set(parser.sections()) - set(defaults.sections))
        if unknown:
            raise ValueError("Unknown config section [{}]".format(unknown[0]))
        sections = {}
        for name in defaults.sections:
            base = getattr(defaults, name)
            if not parser.has_section(name):
                sections[name] = base
                continue
            types = {f.name: f.type for f in dataclasses.fields(base)}
            values = {}
            for key, raw in parser[name].items():
                if key not in types:
                    raise ValueError(
                        "Unknown key '{}' in section [{}]".format(key, name)
                    )
                values[key] = _parse(raw, types[key], name, key)
            sections[name] = dataclasses.replace(base, **values)
        return cls(**sections)

    def save(self, path):
        try:
            with open(path, "w") as handle:
                handle.write(self.to_text())
        except OSError as error:
            raise RuntimeError(
                "Could not write config '{}': {}".format(path, error)
            ) from error

    @classmethod
    def load(cls, path):
        try:
            with open(path) as handle:
                text = handle.read()
        except OSError as error:
            raise ValueError(
                "Could not read config '{}': {}".format(path, error)
            ) from error
        return cls.from_text(text)


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    # repr keeps floats exact and tuples readable by literal_eval
    return repr(value)


def _parse(raw, kind, section, key):
    raw = raw.strip()
    try:
        if kind is str:
            return raw
        if kind is bool:
            lowered = raw.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return lowered in ("true", "1", "yes")
        value = ast.literal_eval(raw)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(raw)
            return value
        if kind is float:
            if isinstance(value, bool):
                raise ValueError(raw)
            return float(value)
        if kind is tuple:
            return tuple(value)
        return value
    except (ValueError, SyntaxError, TypeError):
        raise ValueError(
            "Invalid value '{}' for {}.{}".format(raw, section, key)
        ) from None


def config_digest(config):
    """SHA-256 of the canonical config text"""
    return hashlib.sha256(config.to_text().encode("utf-8")).hexdigest()
