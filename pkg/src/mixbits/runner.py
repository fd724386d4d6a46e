"""Command implementations behind the CLI: baseline training, search,
enumeration, validation, and report bundling."""

import json
from pathlib import Path

from . import pareto as pareto_mod
from . import rng as rng_mod
from .agent.checkpoint import save_checkpoint
from .agent.ppo import Agent
from .config import RunConfig, config_digest
from .cost import QuantAssignment, energy_estimate, speedup_estimate, state_of_quantization
from .env import QuantEnv, SearchResult, run_search
from .errors import ConfigError, DatasetError
from .nn.checkpoint import load_weights, save_weights
from .nn.data import Dataset, load_idx, synth_dataset, synth_image_dataset
from .nn.network import NetworkSpec, build_network_spec, init_weights, record_weight_stats
from .nn.train import TrainConfig, evaluate_accuracy, train
from .reporting import (
    EpisodeCsvWriter,
    read_episode_csv,
    write_formulation_comparison,
    write_manifest,
    write_reward_curve,
)

BASELINE_CHECKPOINT = "baseline.qfwt"
BASELINE_INFO = "baseline.json"
EPISODES_CSV = "episodes.csv"
POLICY_CSV = "policy_evolution.csv"
BEST_JSON = "best_assignment.json"
REPORT_TXT = "report.txt"
AGENT_CHECKPOINT = "agent.qfag"
POINTS_CSV = "points.csv"
FRONTIER_CSV = "frontier.csv"
VALIDATION_JSON = "validation.json"


def build_spec(cfg: RunConfig) -> NetworkSpec:
    return build_network_spec(cfg.name, cfg.network.input, cfg.network.layers)


def load_datasets(cfg: RunConfig) -> tuple[Dataset, Dataset]:
    d = cfg.dataset
    if d.kind == "idx":
        train_set = load_idx(d.train_images, d.train_labels, "train")
        val_set = load_idx(d.val_images, d.val_labels, "validation")
        return train_set, val_set
    if d.kind == "images":
        # same seed for both splits: class templates must match, sample noise
        # differs via the split-named stream
        train_set = synth_image_dataset(d.n_train, cfg.seed, d.classes, d.side, d.noise, "train")
        val_set = synth_image_dataset(d.n_val, cfg.seed, d.classes, d.side, d.noise, "validation")
        return train_set, val_set
    train_set = synth_dataset(d.kind, d.n_train, cfg.seed, d.classes, d.separation)
    val_set = synth_dataset(d.kind, d.n_val, cfg.seed + 1, d.classes, d.separation)
    val_set.split = "validation"
    return train_set, val_set


def _with_seed(cfg: TrainConfig, seed: int) -> TrainConfig:
    return TrainConfig(
        learning_rate=cfg.learning_rate,
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        lambda_q=cfg.lambda_q,
        lambda_wd=cfg.lambda_wd,
        sinreq_bits=cfg.sinreq_bits,
        seed=seed,
    )


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train_baseline(cfg: RunConfig) -> dict:
    """Train the full-precision network; write checkpoint and baseline record."""
    out = _out_dir(cfg)
    spec = build_spec(cfg)
    train_set, val_set = load_datasets(cfg)
    weights = init_weights(spec, rng_mod.stream(cfg.seed, "init/baseline"))
    seed = int(rng_mod.stream(cfg.seed, "train/baseline").integers(0, 2**62))
    weights, curve = train(spec, weights, train_set, _with_seed(cfg.baseline_train, seed))
    accuracy = evaluate_accuracy(spec, weights, val_set)
    record_weight_stats(spec, weights)
    save_weights(weights, out / BASELINE_CHECKPOINT)
    info = {
        "full_precision_accuracy": accuracy,
        "weight_std": [layer.weight_std for layer in spec.layers],
        "loss_curve": curve,
    }
    (out / BASELINE_INFO).write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")
    write_manifest(out, "train-baseline", config_digest(cfg), cfg.seed,
                   [BASELINE_CHECKPOINT, BASELINE_INFO])
    return info


def _load_baseline(cfg: RunConfig, spec: NetworkSpec):
    out = Path(cfg.out_dir)
    checkpoint = out / BASELINE_CHECKPOINT
    info_path = out / BASELINE_INFO
    if not checkpoint.exists() or not info_path.exists():
        raise ConfigError(
            f"missing baseline checkpoint in {out}; run 'mixbits train-baseline' first"
        )
    weights = load_weights(checkpoint)
    info = json.loads(info_path.read_text())
    spec.full_precision_accuracy = float(info["full_precision_accuracy"])
    record_weight_stats(spec, weights)
    return weights


def _make_env(cfg: RunConfig, spec, weights, train_set, val_set) -> QuantEnv:
    return QuantEnv(
        spec,
        weights,
        cfg.bitwidths,
        cfg.cost,
        cfg.reward,
        short_train_cfg=cfg.short_train,
        short_epochs=cfg.env.short_epochs,
        train_data=train_set,
        val_data=val_set,
        train_subsample=cfg.env.train_subsample,
        eval_subsample=cfg.env.eval_subsample,
        action_mode=cfg.env.action_mode,
        reward_mode=cfg.env.reward_mode,
        deferred_depth_threshold=cfg.env.deferred_depth_threshold,
        seed=cfg.seed,
    )


def _solution_report(cfg: RunConfig, spec, result: SearchResult) -> dict:
    assignment = result.best
    baseline = spec.full_precision_accuracy
    loss_pct = (
        (baseline - result.final_accuracy) * 100.0 if result.final_accuracy is not None else None
    )
    return {
        "bits": list(assignment),
        "average_bitwidth": assignment.average(),
        "state_quant": result.best_quant,
        "acc_estimate": result.best_acc,
        "best_episode": result.best_episode,
        "best_reward": result.best_reward,
        "baseline_accuracy": baseline,
        "final_accuracy": result.final_accuracy,
        "accuracy_loss_pct": loss_pct,
        "speedup_compute_only": speedup_estimate(spec, assignment, cfg.cost, "compute_only"),
        "speedup_full_cost": speedup_estimate(spec, assignment, cfg.cost, "full_cost"),
        "energy_reduction": energy_estimate(spec, assignment, cfg.cost),
        "episodes": len(result.episode_logs),
        "wall_clock_seconds": result.wall_clock_seconds,
    }


def _format_report(name: str, report: dict) -> str:
    lines = [
        f"search report: {name}",
        f"  bitwidths per layer : {'-'.join(str(b) for b in report['bits'])}",
        f"  average bitwidth    : {report['average_bitwidth']:.4g}",
        f"  state of quant      : {report['state_quant']:.6g}",
        f"  relative acc (est.) : {report['acc_estimate']:.6g}",
        f"  baseline accuracy   : {report['baseline_accuracy']:.6g}",
    ]
    if report["final_accuracy"] is not None:
        lines.append(f"  final accuracy      : {report['final_accuracy']:.6g}")
        lines.append(f"  accuracy loss (%)   : {report['accuracy_loss_pct']:.4g}")
    lines += [
        f"  speedup (compute)   : {report['speedup_compute_only']:.4g}x",
        f"  speedup (full cost) : {report['speedup_full_cost']:.4g}x",
        f"  energy reduction    : {report['energy_reduction']:.4g}x",
        f"  best episode        : {report['best_episode']}",
        f"  episodes run        : {report['episodes']}",
    ]
    return "\n".join(lines) + "\n"


def cmd_search(cfg: RunConfig) -> dict:
    """Run the PPO bitwidth search and emit logs, report, and agent checkpoint."""
    out = _out_dir(cfg)
    spec = build_spec(cfg)
    train_set, val_set = load_datasets(cfg)
    weights = _load_baseline(cfg, spec)
    env = _make_env(cfg, spec, weights, train_set, val_set)
    ppo_cfg = cfg.ppo
    agent = Agent(env.n_actions, ppo_cfg, rng_mod.stream(cfg.seed, "agent"))
    with EpisodeCsvWriter(out / EPISODES_CSV, out / POLICY_CSV, spec.n_layers, env.bitwidth_set) as writer:
        result = run_search(
            env,
            agent,
            episodes=ppo_cfg.episodes,
            batch_episodes=ppo_cfg.batch_episodes,
            long_cfg=_with_seed(cfg.long_train, int(rng_mod.stream(cfg.seed, "train/long").integers(0, 2**62))),
            on_episode=writer.append,
        )
    report = _solution_report(cfg, spec, result)
    (out / BEST_JSON).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    (out / REPORT_TXT).write_text(_format_report(cfg.name, report))
    save_checkpoint(agent, out / AGENT_CHECKPOINT)
    write_manifest(out, "search", config_digest(cfg), cfg.seed,
                   [EPISODES_CSV, POLICY_CSV, BEST_JSON, REPORT_TXT, AGENT_CHECKPOINT])
    return report


def cmd_enumerate(cfg: RunConfig) -> list[pareto_mod.ParetoPoint]:
    """Exhaustively score the assignment space; write points and frontier CSVs."""
    out = _out_dir(cfg)
    spec = build_spec(cfg)
    train_set, val_set = load_datasets(cfg)
    weights = _load_baseline(cfg, spec)
    points = pareto_mod.enumerate_space(
        spec,
        weights,
        cfg.bitwidths,
        cfg.cost,
        train_set,
        val_set,
        cfg.short_train,
        cfg.env.short_epochs,
        train_subsample=cfg.env.train_subsample,
        eval_subsample=cfg.env.eval_subsample,
        seed=cfg.seed,
        cap=cfg.enumerate.cap,
        jobs=cfg.enumerate.jobs,
    )
    frontier = pareto_mod.pareto_frontier(points)
    pareto_mod.write_points(points, out / POINTS_CSV)
    pareto_mod.write_points(frontier, out / FRONTIER_CSV)
    write_manifest(out, "enumerate", config_digest(cfg), cfg.seed, [POINTS_CSV, FRONTIER_CSV])
    return points


def cmd_validate(cfg: RunConfig, search_dir=None, oracle_dir=None) -> pareto_mod.ValidationReport:
    """Check the search solution against the enumerated frontier."""
    search_dir = Path(search_dir or cfg.out_dir)
    oracle_dir = Path(oracle_dir or cfg.out_dir)
    best_path = search_dir / BEST_JSON
    points_path = oracle_dir / POINTS_CSV
    if not best_path.exists():
        raise ConfigError(f"missing search output {best_path}; run 'mixbits search' first")
    if not points_path.exists():
        raise ConfigError(f"missing oracle output {points_path}; run 'mixbits enumerate' first")
    best = json.loads(best_path.read_text())
    assignment = QuantAssignment(best["bits"])
    points = pareto_mod.read_points(points_path)
    frontier = pareto_mod.pareto_frontier(points)
    by_assignment = {p.assignment.bits: p for p in points}
    solution = by_assignment.get(assignment.bits)
    if solution is None:
        # solution outside the enumerated set: fall back to the search's own estimate
        spec = build_spec(cfg)
        solution = pareto_mod.ParetoPoint(
            assignment, state_of_quantization(spec, assignment, cfg.cost), float(best["acc_estimate"])
        )
    report = pareto_mod.validate_solution(
        solution, frontier, cfg.validate.eps_quant, cfg.validate.eps_acc
    )
    out = _out_dir(cfg)
    payload = {
        "passed": report.passed,
        "solution": {"bits": list(report.solution.assignment), "quant": report.solution.quant,
                     "acc": report.solution.acc},
        "nearest_frontier_point": {"bits": list(report.nearest.assignment),
                                   "quant": report.nearest.quant, "acc": report.nearest.acc},
        "quant_distance": report.quant_distance,
        "acc_distance": report.acc_distance,
        "eps_quant": report.eps_quant,
        "eps_acc": report.eps_acc,
    }
    (out / VALIDATION_JSON).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    write_manifest(out, "validate", config_digest(cfg), cfg.seed, [VALIDATION_JSON])
    return report


def cmd_report(run_dirs: list, out_dir) -> list[Path]:
    """Emit plot-data bundles from existing episode logs."""
    run_dirs = [Path(d) for d in run_dirs]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not run_dirs:
        raise ConfigError("report needs at least one run directory")
    for d in run_dirs:
        if not (d / EPISODES_CSV).exists():
            raise DatasetError(f"missing episode log {d / EPISODES_CSV}")
    produced = []
    primary_rows = read_episode_csv(run_dirs[0] / EPISODES_CSV)
    reward_path = out / "reward_vs_episode.csv"
    write_reward_curve(primary_rows, reward_path)
    produced.append(reward_path)

    policy_src = run_dirs[0] / POLICY_CSV
    if policy_src.exists():
        dest = out / "action_probabilities.csv"
        dest.write_bytes(policy_src.read_bytes())
        produced.append(dest)

    series = {d.name or f"run{i}": read_episode_csv(d / EPISODES_CSV) for i, d in enumerate(run_dirs)}
    comparison_path = out / "formulation_comparison.csv"
    write_formulation_comparison(series, comparison_path)
    produced.append(comparison_path)
    return produced
