"""Layer-by-layer bitwidth search environment and the episode/search loops.

An episode is one pass over the network's layers: the agent reads the
state embedding for the layer under decision, picks a bitwidth, and the
environment recomputes the quantization state, estimates accuracy via a
short quantized finetune (or an injected oracle), and emits the shaped
reward. Policy updates happen between episodes.
"""

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import rng as rng_mod
from .agent.embedding import embed_state
from .agent.ppo import Agent, Trajectory, action_mask
from .cost import CostParams, QuantAssignment, state_of_quantization
from .errors import ConfigError, TrainingDivergedError
from .nn.data import Dataset
from .nn.network import NetworkSpec, Weights, copy_weights
from .nn.train import TrainConfig, evaluate_accuracy, finetune_and_estimate, train

REWARD_FORMULATIONS = ("shaped", "ratio", "difference")


@dataclass
class RewardParams:
    a: float = 0.2
    b: float = 0.4
    th: float = 0.4
    formulation: str = "shaped"

    def __post_init__(self):
        if not 0.0 < self.th < 1.0:
            raise ConfigError("accuracy threshold must lie in (0, 1)")
        if self.a <= 0 or self.b <= 0:
            raise ConfigError("reward exponents a and b must be > 0")
        if self.formulation not in REWARD_FORMULATIONS:
            raise ConfigError(f"formulation must be one of {REWARD_FORMULATIONS}")


def compute_reward(quant_state: float, acc_state: float, p: RewardParams) -> float:
    """Asymmetric shaped reward, or one of the two plain alternatives.

    The shaped form pays 1 - quant^a for bit savings, discounted by
    max(acc, th)^(b / max(acc, th)), and drops to a flat -1 whenever
    relative accuracy falls below the threshold.
    """
    if p.formulation == "ratio":
        return acc_state / quant_state
    if p.formulation == "difference":
        return acc_state - quant_state
    if acc_state < p.th:
        return -1.0
    base = 1.0 - quant_state**p.a
    anchored = max(acc_state, p.th)
    return base * anchored ** (p.b / anchored)


@dataclass
class EnvState:
    cursor: int
    assignment: list[int]
    quant_state: float
    acc_state: float
    scratch: Weights | None


@dataclass
class StepRecord:
    embedding: np.ndarray
    mask: np.ndarray
    action: int
    log_prob: float
    value: float
    distribution: np.ndarray
    reward: float
    bits: int


@dataclass
class EpisodeLog:
    episode: int
    bits: list[int]
    quant_state: float
    acc_state: float
    final_reward: float
    mean_reward: float
    distributions: list[np.ndarray]


@dataclass
class SearchResult:
    best: QuantAssignment
    best_episode: int
    best_reward: float
    best_quant: float
    best_acc: float
    episode_logs: list[EpisodeLog]
    final_accuracy: float | None
    wall_clock_seconds: float


class QuantEnv:
    """Search environment bound to one pretrained network.

    accuracy_fn, when given, replaces short finetuning entirely: it maps
    a bitwidth assignment to a relative accuracy (used by the toy
    harnesses where the answer is analytic).
    """

    def __init__(
        self,
        spec: NetworkSpec,
        pretrained: Weights | None,
        bitwidth_set: Sequence[int],
        cost_params: CostParams,
        reward_params: RewardParams,
        *,
        short_train_cfg: TrainConfig | None = None,
        short_epochs: int = 1,
        train_data: Dataset | None = None,
        val_data: Dataset | None = None,
        train_subsample: int = 1000,
        eval_subsample: int = 1000,
        action_mode: str = "flexible",
        reward_mode: str = "auto",
        deferred_depth_threshold: int = 6,
        accuracy_fn: Callable[[QuantAssignment], float] | None = None,
        seed: int = 0,
    ):
        if spec.full_precision_accuracy is None and accuracy_fn is None:
            raise ConfigError("baseline accuracy missing: train the full-precision network first")
        if accuracy_fn is None and (pretrained is None or train_data is None or val_data is None):
            raise ConfigError("need pretrained weights and data unless an accuracy oracle is given")
        self.spec = spec
        self.canonical = copy_weights(pretrained) if pretrained is not None else None
        self.bitwidth_set = sorted(int(b) for b in bitwidth_set)
        self.cost_params = cost_params
        self.reward_params = reward_params
        self.short_train_cfg = short_train_cfg
        self.short_epochs = short_epochs
        self.train_data = train_data
        self.val_data = val_data
        self.train_subsample = train_subsample
        self.eval_subsample = eval_subsample
        self.action_mode = action_mode
        if reward_mode == "auto":
            reward_mode = "per_step" if spec.n_layers <= deferred_depth_threshold else "deferred"
        if reward_mode not in ("per_step", "deferred"):
            raise ConfigError(f"unknown reward mode {reward_mode!r}")
        self.reward_mode = reward_mode
        self.accuracy_fn = accuracy_fn
        self.seed = seed
        if accuracy_fn is None:
            eval_rng = rng_mod.stream(seed, "env/eval-subsample")
            self._val_subset = val_data.subsample(eval_subsample, eval_rng)
        else:
            self._val_subset = None
        self._episode_train: Dataset | None = None

    @property
    def n_actions(self) -> int:
        return len(self.bitwidth_set)

    @property
    def init_bits(self) -> int:
        return self.bitwidth_set[-1]

    def reset(self, episode: int = 0) -> EnvState:
        """Fresh episode: all layers at the maximum bitwidth, accuracy neutral."""
        assignment = [self.init_bits] * self.spec.n_layers
        quant = state_of_quantization(self.spec, assignment, self.cost_params)
        scratch = copy_weights(self.canonical) if self.canonical is not None else None
        if self.accuracy_fn is None:
            ep_rng = rng_mod.stream(self.seed, f"env/episode/{episode}")
            self._episode_train = self.train_data.subsample(self.train_subsample, ep_rng)
            self._episode_seed = int(ep_rng.integers(0, 2**62))
        return EnvState(0, assignment, quant, 1.0, scratch)

    def _estimate(self, state: EnvState) -> float:
        """Relative accuracy of the current assignment, via oracle or finetune."""
        assignment = QuantAssignment(state.assignment)
        if self.accuracy_fn is not None:
            return float(self.accuracy_fn(assignment))
        cfg = self.short_train_cfg
        run_cfg = TrainConfig(
            learning_rate=cfg.learning_rate,
            epochs=cfg.epochs,
            batch_size=cfg.batch_size,
            lambda_q=cfg.lambda_q,
            lambda_wd=cfg.lambda_wd,
            sinreq_bits=cfg.sinreq_bits,
            seed=self._episode_seed,
        )
        acc, tuned = finetune_and_estimate(
            self.spec,
            state.scratch,
            state.assignment,
            self._episode_train,
            self._val_subset,
            run_cfg,
            self.short_epochs,
        )
        state.scratch = tuned
        return acc / self.spec.full_precision_accuracy

    def step(self, state: EnvState, agent: Agent, agent_states) -> tuple[StepRecord, bool, tuple]:
        """Let the agent pick a bitwidth for the layer under the cursor."""
        if state.cursor >= self.spec.n_layers:
            raise ConfigError("episode already finished")
        layer = self.spec.layers[state.cursor]
        bits_now = state.assignment[state.cursor]
        embedding = embed_state(
            layer, bits_now, state.quant_state, state.acc_state,
            self.spec.n_layers, self.cost_params.max_bits,
        )
        mask = action_mask(self.bitwidth_set, bits_now, self.action_mode)
        action, log_prob, value, dist, agent_states = agent.act(embedding, agent_states, mask)
        bits = self.bitwidth_set[action]
        state.assignment[state.cursor] = bits
        state.quant_state = state_of_quantization(self.spec, state.assignment, self.cost_params)
        state.cursor += 1
        done = state.cursor == self.spec.n_layers

        if self.reward_mode == "per_step" or done:
            try:
                state.acc_state = self._estimate(state)
                reward = compute_reward(state.quant_state, state.acc_state, self.reward_params)
            except TrainingDivergedError:
                # accuracy collapse: hard penalty, episode stays well formed
                state.acc_state = 0.0
                reward = -1.0
        else:
            reward = 0.0
        record = StepRecord(embedding, mask, action, log_prob, value, dist, reward, bits)
        return record, done, agent_states

    def run_episode(self, agent: Agent, episode: int) -> tuple[Trajectory, EpisodeLog]:
        state = self.reset(episode)
        agent_states = agent.start_episode()
        traj = Trajectory()
        records: list[StepRecord] = []
        done = False
        while not done:
            record, done, agent_states = self.step(state, agent, agent_states)
            records.append(record)
            traj.embeddings.append(record.embedding)
            traj.actions.append(record.action)
            traj.log_probs.append(record.log_prob)
            traj.values.append(record.value)
            traj.rewards.append(record.reward)
            traj.masks.append(record.mask)
            traj.distributions.append(record.distribution)
        rewards = [r.reward for r in records]
        log = EpisodeLog(
            episode=episode,
            bits=list(state.assignment),
            quant_state=state.quant_state,
            acc_state=state.acc_state,
            final_reward=rewards[-1],
            mean_reward=float(np.mean(rewards)),
            distributions=[r.distribution for r in records],
        )
        return traj, log

    def long_retrain(self, assignment: QuantAssignment, long_cfg: TrainConfig) -> tuple[float, Weights]:
        """Full-budget quantized retrain of the canonical weights."""
        if self.canonical is None or self.train_data is None or self.val_data is None:
            raise ConfigError("long retrain needs pretrained weights and datasets")
        tuned, _ = train(self.spec, self.canonical, self.train_data, long_cfg, assignment)
        acc = evaluate_accuracy(self.spec, tuned, self.val_data, assignment)
        return acc, tuned


def run_search(
    env: QuantEnv,
    agent: Agent,
    episodes: int,
    batch_episodes: int = 1,
    long_cfg: TrainConfig | None = None,
    on_episode: Callable[[EpisodeLog], None] | None = None,
) -> SearchResult:
    """Run the full episode/update loop and return the best assignment found.

    Best = highest terminal reward, ties broken by lower quantization
    state, then by earlier episode. episodes == 0 returns the initial
    uniform-maximum assignment. With long_cfg given, the best assignment
    gets a final long quantized retrain and its accuracy is recorded.
    """
    start = time.perf_counter()
    logs: list[EpisodeLog] = []
    best: tuple[float, float, int] | None = None  # (-reward, quant, episode) for min()
    best_log: EpisodeLog | None = None
    pending: list[Trajectory] = []
    for episode in range(episodes):
        traj, log = env.run_episode(agent, episode)
        logs.append(log)
        if on_episode is not None:
            on_episode(log)
        key = (-log.final_reward, log.quant_state, episode)
        if best is None or key < best:
            best = key
            best_log = log
        pending.append(traj)
        if len(pending) >= batch_episodes:
            agent.update(pending)
            pending = []
    if pending:
        agent.update(pending)

    if best_log is None:
        assignment = QuantAssignment([env.init_bits] * env.spec.n_layers)
        quant = state_of_quantization(env.spec, assignment, env.cost_params)
        best_log = EpisodeLog(-1, list(assignment), quant, 1.0, 0.0, 0.0, [])
    else:
        assignment = QuantAssignment(best_log.bits)

    final_accuracy = None
    if long_cfg is not None and env.canonical is not None:
        final_accuracy, _ = env.long_retrain(assignment, long_cfg)
    return SearchResult(
        best=assignment,
        best_episode=best_log.episode,
        best_reward=best_log.final_reward,
        best_quant=best_log.quant_state,
        best_acc=best_log.acc_state,
        episode_logs=logs,
        final_accuracy=final_accuracy,
        wall_clock_seconds=time.perf_counter() - start,
    )
