"""PPO actor-critic agent with LSTM-first policy and value networks."""

from .checkpoint import load_checkpoint, save_checkpoint
from .embedding import EMBEDDING_DIM, embed_state
from .nets import RecurrentNet, make_policy_net, make_value_net, masked_softmax
from .ppo import (
    Adam,
    Agent,
    PPOConfig,
    Trajectory,
    action_mask,
    gae_advantages,
    ppo_update,
    restrict_actions,
    sample_action,
)

__all__ = [
    "Adam",
    "Agent",
    "EMBEDDING_DIM",
    "PPOConfig",
    "RecurrentNet",
    "Trajectory",
    "action_mask",
    "embed_state",
    "gae_advantages",
    "load_checkpoint",
    "make_policy_net",
    "make_value_net",
    "masked_softmax",
    "ppo_update",
    "restrict_actions",
    "sample_action",
    "save_checkpoint",
]
