from .tensor import (
    Tensor,
    add,
    concat,
    conv2d,
    exp,
    get_default_dtype,
    gru_cell,
    matmul,
    mean,
    minimum,
    mul,
    no_grad,
    precision,
    scaled_dot_attention,
    set_default_dtype,
    softmax,
    sum,
    tanh,
    tensor,
)
from .layers import MLP, Conv2d, GRUCell, Linear, Module, SelfAttention
from .networks import (
    REWARD_GROUPS,
    Agent,
    Critic,
    DepthEncoder,
    Estimator,
    GaussianPolicy,
    NetworkConfig,
)
from .optim import Adam, clip_grad_norm
from .checkpoint import read_checkpoint, write_checkpoint
from .gradcheck import check_module, gradcheck, numerical_gradient
