"""Clipped-surrogate PPO over the recurrent actor/critic pair."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, TrainingDivergedError
from .embedding import EMBEDDING_DIM
from .nets import ParamDict, RecurrentNet, make_policy_net, make_value_net, masked_softmax


@dataclass
class PPOConfig:
    adam_step_size: float = 1e-4
    gae_parameter: float = 0.99
    discount_gamma: float = 0.99
    update_epochs: int = 3
    clip_epsilon: float = 0.1
    entropy_coeff: float = 0.01
    episodes: int = 500
    batch_episodes: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ConfigError("clip_epsilon must lie in (0, 1)")
        if self.update_epochs < 1:
            raise ConfigError("update_epochs must be >= 1")
        if self.episodes < 0:
            raise ConfigError("episodes must be >= 0")
        if self.batch_episodes < 1:
            raise ConfigError("batch_episodes must be >= 1")


@dataclass
class Trajectory:
    """One episode: a record per layer-decision step."""

    embeddings: list = field(default_factory=list)  # (7,) arrays
    actions: list = field(default_factory=list)  # action indices
    log_probs: list = field(default_factory=list)  # of the effective (masked) policy
    values: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    masks: list = field(default_factory=list)  # (n_actions,) bool restriction masks
    distributions: list = field(default_factory=list)  # effective per-step policies

    def __len__(self) -> int:
        return len(self.actions)


def action_mask(bitwidth_set, current_bits: int, mode: str) -> np.ndarray:
    """Allowed-action mask: everything (flexible) or the +-1-bit band (restricted)."""
    bits = np.asarray(list(bitwidth_set))
    if mode == "flexible":
        return np.ones(len(bits), dtype=bool)
    if mode == "restricted":
        return np.abs(bits - current_bits) <= 1
    raise ConfigError(f"unknown action mode {mode!r}")


def restrict_actions(dist: np.ndarray, current_bits: int, mode: str, bitwidth_set) -> np.ndarray:
    """Project a distribution onto the allowed actions and renormalize."""
    if mode == "flexible":
        return np.asarray(dist, dtype=np.float64)
    mask = action_mask(bitwidth_set, current_bits, mode)
    masked = np.where(mask, dist, 0.0)
    total = masked.sum()
    if total <= 0.0:
        return mask.astype(np.float64) / mask.sum()
    return masked / total


def sample_action(dist: np.ndarray, rng: np.random.Generator) -> int:
    """Draw an action index from a probability vector."""
    cum = np.cumsum(dist)
    return int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))


def gae_advantages(
    rewards, values, gamma: float, lam: float
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimates and value targets for one episode.

    Terminal bootstrap value is zero. With lam=0 this reduces to the
    one-step TD advantage.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    t_len = len(rewards)
    advantages = np.zeros(t_len)
    last = 0.0
    for t in range(t_len - 1, -1, -1):
        next_value = values[t + 1] if t + 1 < t_len else 0.0
        delta = rewards[t] + gamma * next_value - values[t]
        last = delta + gamma * lam * last
        advantages[t] = last
    return advantages, advantages + values


class Adam:
    def __init__(self, params: ParamDict, step_size: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.step_size = step_size
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: ParamDict, grads: ParamDict) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, g in grads.items():
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            m_hat = self.m[name] / (1 - b1**self.t)
            v_hat = self.v[name] / (1 - b2**self.t)
            params[name] -= self.step_size * m_hat / (np.sqrt(v_hat) + self.eps)


class Agent:
    """Actor-critic pair plus its optimizers and action-sampling state."""

    def __init__(self, n_actions: int, cfg: PPOConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.n_actions = n_actions
        self.policy = make_policy_net(EMBEDDING_DIM, n_actions, rng)
        self.value = make_value_net(EMBEDDING_DIM, rng)
        self.opt_policy = Adam(self.policy.params, cfg.adam_step_size)
        self.opt_value = Adam(self.value.params, cfg.adam_step_size)
        self.rng = rng

    def start_episode(self):
        return self.policy.zero_state(1), self.value.zero_state(1)

    def act(self, embedding: np.ndarray, states, mask: np.ndarray):
        """Policy/value forward for one step; returns the sampled action.

        states is the (policy_state, value_state) pair from start_episode
        or the previous act call.
        """
        policy_state, value_state = states
        x = embedding[None, :]
        logits, policy_state = self.policy.step(x, policy_state)
        value_out, value_state = self.value.step(x, value_state)
        dist = masked_softmax(logits[0], mask)
        action = sample_action(dist, self.rng)
        log_prob = float(np.log(dist[action]))
        return action, log_prob, float(value_out[0, 0]), dist, (policy_state, value_state)

    def update(self, trajectories: list[Trajectory]) -> dict:
        return ppo_update(self, trajectories, self.cfg)


def _stack_batch(trajectories: list[Trajectory]):
    """Group same-length episodes into (T, B, .) arrays for batched BPTT."""
    t_len = len(trajectories[0])
    if any(len(tr) != t_len for tr in trajectories):
        raise ConfigError("trajectories in one update batch must have equal length")
    xs = np.stack([np.stack(tr.embeddings) for tr in trajectories], axis=1)
    actions = np.stack([tr.actions for tr in trajectories], axis=1)
    masks = np.stack([np.stack(tr.masks) for tr in trajectories], axis=1)
    old_log = np.stack([tr.log_probs for tr in trajectories], axis=1)
    return xs, actions, masks, old_log


def ppo_update(agent: Agent, trajectories: list[Trajectory], cfg: PPOConfig) -> dict:
    """Clipped-surrogate update with entropy bonus and MSE value loss.

    Runs cfg.update_epochs full-batch passes; advantages are normalized
    to zero mean and unit variance across the batch.
    """
    if not trajectories:
        raise ConfigError("ppo_update needs at least one trajectory")
    xs, actions, masks, old_log = _stack_batch(trajectories)
    t_len, batch = actions.shape
    n = t_len * batch

    adv = np.empty((t_len, batch))
    ret = np.empty((t_len, batch))
    for j, tr in enumerate(trajectories):
        adv[:, j], ret[:, j] = gae_advantages(
            tr.rewards, tr.values, cfg.discount_gamma, cfg.gae_parameter
        )
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)

    stats = {}
    rows = np.arange(batch)
    for _ in range(cfg.update_epochs):
        logits, p_caches = agent.policy.forward_seq(xs)
        probs = masked_softmax(logits, masks)
        taken = probs[np.arange(t_len)[:, None], rows[None, :], actions]
        log_new = np.log(np.maximum(taken, 1e-300))
        ratio = np.exp(log_new - old_log)
        clipped = np.clip(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon)
        surr1 = ratio * adv
        surr2 = clipped * adv
        surrogate = np.minimum(surr1, surr2)

        with np.errstate(divide="ignore", invalid="ignore"):
            log_p = np.where(probs > 0, np.log(np.maximum(probs, 1e-300)), 0.0)
        entropy = -(probs * log_p).sum(axis=-1)

        loss = -surrogate.mean() - cfg.entropy_coeff * entropy.mean()
        value_out, v_caches = agent.value.forward_seq(xs)
        v = value_out[:, :, 0]
        value_loss = float(np.mean((v - ret) ** 2))
        if not (np.isfinite(loss) and np.isfinite(value_loss)):
            raise TrainingDivergedError(0, "PPO update diverged (non-finite loss)")

        # d(-surrogate)/d log_new: active only where the unclipped term wins the min
        dlog = np.where(surr1 <= surr2, ratio * adv, 0.0) / n
        one_hot = np.zeros_like(probs)
        one_hot[np.arange(t_len)[:, None], rows[None, :], actions] = 1.0
        dlogits = -dlog[:, :, None] * (one_hot - probs)
        # entropy bonus gradient: dH/dz = -p * (log p + H)
        d_entropy = -probs * (log_p + entropy[:, :, None])
        dlogits -= cfg.entropy_coeff / n * d_entropy
        policy_grads = agent.policy.backward_seq(p_caches, dlogits)

        dv = (2.0 / n) * (v - ret)
        value_grads = agent.value.backward_seq(v_caches, dv[:, :, None])

        agent.opt_policy.step(agent.policy.params, policy_grads)
        agent.opt_value.step(agent.value.params, value_grads)
        stats = {
            "policy_loss": float(-surrogate.mean()),
            "value_loss": value_loss,
            "entropy": float(entropy.mean()),
        }
    return stats
