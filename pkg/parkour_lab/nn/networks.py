from dataclasses import dataclass

import numpy as np

from .layers import MLP, Conv2d, GRUCell, Linear, Module, SelfAttention
from .layers import flatten, parameter
from .tensor import Tensor, concat, tensor

LOG_2PI = float(np.log(2.0 * np.pi))

REWARD_GROUPS = ("task", "foothold", "style")


@dataclass(frozen=True)
class NetworkConfig:
    """
    Sizes of the estimator, policy and critics

    Attributes
    ----------
    observation_size, privileged_size, height_points : int
        o_t, s_t and H_t sizes
    action_size : int
        Policy output size
    proprio_history, depth_history : int
        H1 observations and H2 depth frames fed to the estimator
    depth_shape : tuple of int
        (height, width) of a depth frame
    conv_channels : tuple of int
        Output channels of the stride-2 conv layers
    token_dim : int
        Width of the attention tokens
    attention_heads : int
        Heads of the self-attention layer
    gru_hidden : int
        Hidden size of the GRU over the history
    latent_dim : int
        Size of the environment latent z
    prior_size : int
        Size of the foothold prior fed to the policy (0 disables it)
    estimate_size : int
        Size of the estimator's prior head
    critic_prior_size : int
        Size of the ground-truth prior fed to the critics
    policy_hidden, critic_hidden, head_hidden : tuple of int
        Hidden sizes of the MLPs
    activation : str
        Hidden activation of every MLP
    init_std : float
        Initial action standard deviation
    zero_heads : bool
        Zero-initialize the estimator output layers
    critic_groups : tuple of str
        One critic per named reward group
    """

    observation_size: int = 45
    privileged_size: int = 60
    height_points: int = 77
    action_size: int = 12
    proprio_history: int = 10
    depth_history: int = 2
    depth_shape: tuple = (48, 64)
    conv_channels: tuple = (8, 16, 32)
    token_dim: int = 64
    attention_heads: int = 4
    gru_hidden: int = 128
    latent_dim: int = 64
    prior_size: int = 4
    estimate_size: int = 4
    critic_prior_size: int = 4
    policy_hidden: tuple = (256, 128, 64)
    critic_hidden: tuple = (256, 128)
    head_hidden: tuple = (64,)
    activation: str = "elu"
    init_std: float = 0.5
    zero_heads: bool = False
    critic_groups: tuple = REWARD_GROUPS


class DepthEncoder(Module):
    """Stride-2 conv stack over the stacked depth frames, then a token"""

    def __init__(self, config, rng):
        channels = (config.depth_history,) + tuple(config.conv_channels)
        self.convs = [
            Conv2d(a, b, 3, rng, stride=2, padding=1)
            for a, b in zip(channels[:-1], channels[1:])
        ]
        h, w = config.depth_shape
        for _ in self.convs:
            h, w = (h - 1) // 2 + 1, (w - 1) // 2 + 1
        self.project = Linear(channels[-1] * h * w, config.token_dim, rng)

    def forward(self, depth):
        x = depth
        for conv in self.convs:
            x = conv(x).elu()
        return self.project(flatten(x)).elu()


class Estimator(Module):
    """
    Regresses the foothold prior, base velocity and environment latent

    The depth stack becomes one token and each observation of the
    proprioceptive history another. Self-attention mixes the tokens, a
    GRU runs over the attended history tokens in time order and three MLP
    heads read its final state.
    """

    def __init__(self, config, rng):
        self.config = config
        self.depth = DepthEncoder(config, rng)
        self.proprio = Linear(config.observation_size, config.token_dim, rng)
        self.attention = SelfAttention(
            config.token_dim, config.attention_heads, rng
        )
        self.gru = GRUCell(config.token_dim, config.gru_hidden, rng)

        def head(size):
            return MLP(
                (config.gru_hidden,) + tuple(config.head_hidden) + (size,),
                rng,
                config.activation,
                zero_output=config.zero_heads,
            )

        self.prior_head = head(config.estimate_size)
        self.velocity_head = head(3)
        self.latent_head = head(config.latent_dim)

    def forward(self, history, depth):
        """
        Parameters
        ----------
        history : array_like or Tensor
            (batch, H1, observation_size) proprioceptive history
        depth : array_like or Tensor
            (batch, H2, height, width) normalized depth stack

        Returns
        -------
        tuple of Tensor
            Prior estimate, base velocity estimate and latent
        """
        cfg = self.config
        history, depth = tensor(history), tensor(depth)
        expected = (cfg.proprio_history, cfg.observation_size)
        if history.ndim != 3 or history.shape[1:] != expected:
            raise ValueError(
                "Estimator history must be (batch, {}, {}), got {}".format(
                    *expected, history.shape
                )
            )
        frames = (cfg.depth_history,) + tuple(cfg.depth_shape)
        if depth.ndim != 4 or depth.shape[1:] != frames:
            raise ValueError(
                "Estimator depth must be (batch, {}, {}, {}), got {}".format(
                    *frames, depth.shape
                )
            )
        batch = history.shape[0]
        depth_token = self.depth(depth)
        proprio = self.proprio(history).elu()
        tokens = concat(
            [depth_token.reshape(batch, 1, cfg.token_dim), proprio], 1
        )
        mixed = self.attention(tokens)
        state = self.gru.run(mixed[:, 1:, :])
        return (
            self.prior_head(state),
            self.velocity_head(state),
            self.latent_head(state),
        )


class GaussianPolicy(Module):
    """
    MLP actor with a state-independent learnable log standard deviation

    The input is the concatenation of o_t, the foothold prior, the
    velocity estimate and the latent.
    """

    def __init__(self, config, rng):
        self.config = config
        n_in = (
            config.observation_size
            + config.prior_size
            + 3
            + config.latent_dim
        )
        self.mlp = MLP(
            (n_in,) + tuple(config.policy_hidden) + (config.action_size,),
            rng,
            config.activation,
            output_gain=0.01,
        )
        self.log_std = parameter(
            np.full(config.action_size, np.log(config.init_std))
        )

    @property
    def input_size(self):
        return self.mlp.layers[0].n_in

    def inputs(self, obs, prior, velocity, latent):
        parts = [tensor(obs)]
        if self.config.prior_size:
            parts.append(tensor(prior))
        parts += [tensor(velocity), tensor(latent)]
        return concat(parts, -1)

    def forward(self, obs, prior, velocity, latent):
        """Action mean"""
        return self.mlp(self.inputs(obs, prior, velocity, latent))

    def log_prob(self, mean, actions):
        """Gaussian log-density of actions, summed over action components"""
        std = self.log_std.exp()
        z = (tensor(actions) - mean) / std
        per = z * z * -0.5 - self.log_std - 0.5 * LOG_2PI
        return per.sum(-1)

    def entropy(self):
        return (self.log_std + 0.5 * (1.0 + LOG_2PI)).sum()

    def sample(self, mean, rng, deterministic=False):
        mean = mean.data if isinstance(mean, Tensor) else np.asarray(mean)
        if deterministic:
            return mean.copy()
        std = np.exp(self.log_std.data)
        return mean + std * rng.standard_normal(mean.shape)


class Critic(Module):
    """Value MLP over s_t, H_t and the ground-truth prior"""

    def __init__(self, config, rng):
        n_in = (
            config.privileged_size
            + config.height_points
            + config.critic_prior_size
        )
        self.mlp = MLP(
            (n_in,) + tuple(config.critic_hidden) + (1,),
            rng,
            config.activation,
        )

    def forward(self, privileged, heights, prior):
        x = concat([tensor(privileged), tensor(heights), tensor(prior)], -1)
        return self.mlp(x).reshape(-1)


class Agent(Module):
    """
    Every trained network of one run

    Attributes
    ----------
    estimator : Estimator
        Shared trunk with the prior, velocity and latent heads
    decoder : MLP
        Reconstructs the height samples H_t from the latent
    prior_decoder : MLP or None
        Maps an implicit prior latent onto the Cartesian foothold target
    policy : GaussianPolicy
        Actor
    critics : dict of Critic
        One value network per reward group
    """

    def __init__(self, config=None, seed=0, prior_decoder_size=0):
        config = config or NetworkConfig()
        rng = np.random.default_rng(seed)
        self.config = config
        self.estimator = Estimator(config, rng)
        self.decoder = MLP(
            (config.latent_dim, 128, config.height_points),
            rng,
            config.activation,
        )
        self.prior_decoder = (
            MLP(
                (config.estimate_size, 64, prior_decoder_size),
                rng,
                config.activation,
            )
            if prior_decoder_size
            else None
        )
        self.policy = GaussianPolicy(config, rng)
        self.critics = {
            group: Critic(config, rng) for group in config.critic_groups
        }

    def estimator_parameters(self):
        params = self.estimator.parameters() + self.decoder.parameters()
        if self.prior_decoder is not None:
            params += self.prior_decoder.parameters()
        return params

    def state_dict(self):
        """Parameter arrays by dotted name"""
        return {
            name: np.array(p.data) for name, p in self.named_parameters()
        }

    def load_state_dict(self, arrays):
        """Copy arrays into the parameters, checking names and shapes"""
        params = dict(self.named_parameters())
        missing = sorted(set(params) - set(arrays))
        if missing:
            raise RuntimeError(
                "Checkpoint lacks parameter '{}'".format(missing[0])
            )
        unknown = sorted(set(arrays) - set(params))
        if unknown:
            raise RuntimeError(
                "Checkpoint has unknown parameter '{}'".format(unknown[0])
            )
        for name, p in params.items():
            values = np.asarray(arrays[name])
            if values.shape != p.shape:
                raise RuntimeError(
                    "Parameter '{}' has shape {} in the checkpoint but {} "
                    "in the network".format(name, values.shape, p.shape)
                )
            p.data = values.astype(p.data.dtype)
