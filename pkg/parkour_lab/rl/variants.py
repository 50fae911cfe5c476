from dataclasses import dataclass, replace
from typing import Optional

from ..nn import REWARD_GROUPS
from ..sensors import PRIOR_SIZES

SINGLE_CRITIC_GROUP = "total"


@dataclass(frozen=True)
class Variant:
    """
    Ablation switches of one training configuration

    Attributes
    ----------
    name : str
        Variant identifier
    prior_kind : str
        Ground-truth prior encoding the estimator regresses and the actor
        may receive (a PRIOR_SIZES key)
    actor_prior : bool
        Whether the actor receives a prior at all
    implicit : bool
        The estimator emits a prior latent, decoded to the Cartesian
        footholds for supervision; the actor always receives the latent
    fixed_probability : float, optional
        Constant PAS probability overriding the schedule
    single_critic : bool
        One critic on the group-weighted scalar reward
    """

    name: str
    prior_kind: str = "polar"
    actor_prior: bool = True
    implicit: bool = False
    fixed_probability: Optional[float] = None
    single_critic: bool = False

    @property
    def estimate_size(self):
        if self.implicit:
            return PRIOR_SIZES["polar"]
        return PRIOR_SIZES[self.prior_kind]

    @property
    def uses_pas(self):
        return self.actor_prior and not self.implicit

    @property
    def critic_groups(self):
        if self.single_critic:
            return (SINGLE_CRITIC_GROUP,)
        return REWARD_GROUPS

    def network_config(self, base):
        """Adapt a NetworkConfig to the variant"""
        return replace(
            base,
            prior_size=self.estimate_size if self.actor_prior else 0,
            estimate_size=self.estimate_size,
            critic_groups=self.critic_groups,
        )

    def prior_decoder_size(self):
        return PRIOR_SIZES["cartesian"] if self.implicit else 0


VARIANTS = {
    "full": Variant("full"),
    "no_prior": Variant("no_prior", actor_prior=False),
    "no_distance": Variant("no_distance", prior_kind="yaw"),
    "explicit_cartesian": Variant(
        "explicit_cartesian", prior_kind="cartesian"
    ),
    "implicit_cartesian": Variant(
        "implicit_cartesian", prior_kind="cartesian", implicit=True
    ),
    "no_pas": Variant("no_pas", fixed_probability=1.0),
    "single_critic": Variant("single_critic", single_critic=True),
}


def get_variant(name):
    """Look up an ablation variant by name"""
    if isinstance(name, Variant):
        return name
    if name not in VARIANTS:
        raise ValueError(
            "Unknown variant '{}'. Try {}".format(name, ", ".join(VARIANTS))
        )
    return VARIANTS[name]
