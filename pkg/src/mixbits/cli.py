"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 runtime/training error,
4 validation FAIL.
"""

import dataclasses
import sys

import click

from . import runner
from .config import load_config
from .errors import ConfigError, MixbitsError

EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_VALIDATION = 4


def _apply_overrides(cfg, seed, out, jobs, action_mode, reward, clip_epsilon):
    if seed is not None:
        cfg.seed = int(seed)
    if out is not None:
        cfg.out_dir = str(out)
    if jobs is not None:
        cfg.enumerate = dataclasses.replace(cfg.enumerate, jobs=int(jobs))
    if action_mode is not None:
        cfg.env = dataclasses.replace(cfg.env, action_mode=action_mode)
    if reward is not None:
        cfg.reward = dataclasses.replace(cfg.reward, formulation=reward)
    if clip_epsilon is not None:
        cfg.ppo = dataclasses.replace(cfg.ppo, clip_epsilon=float(clip_epsilon))
    return cfg


def _load(config_path, **overrides):
    cfg = load_config(config_path)
    return _apply_overrides(cfg, **overrides)


_common = [
    click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False)),
    click.option("--seed", type=int, default=None, help="Override the config seed."),
    click.option("--out", type=click.Path(file_okay=False), default=None, help="Override the output directory."),
    click.option("--jobs", type=int, default=None, help="Worker threads for enumeration."),
    click.option("--action-mode", type=click.Choice(["flexible", "restricted"]), default=None),
    click.option("--reward", type=click.Choice(["shaped", "ratio", "difference"]), default=None),
    click.option("--clip-epsilon", type=float, default=None),
]


def _with_common(fn):
    for option in reversed(_common):
        fn = option(fn)
    return fn


@click.group()
def main():
    """Per-layer quantization bitwidth search with PPO and Pareto validation."""


def _run(fn):
    try:
        return fn()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except MixbitsError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)


@main.command("train-baseline")
@_with_common
def train_baseline(config_path, **overrides):
    """Train the full-precision baseline and record its accuracy."""
    cfg = _run(lambda: _load(config_path, **overrides))
    info = _run(lambda: runner.cmd_train_baseline(cfg))
    click.echo(f"baseline accuracy: {info['full_precision_accuracy']:.4f}")


@main.command("search")
@_with_common
def search(config_path, **overrides):
    """Run the PPO bitwidth search from the trained baseline."""
    cfg = _run(lambda: _load(config_path, **overrides))
    report = _run(lambda: runner.cmd_search(cfg))
    bits = "-".join(str(b) for b in report["bits"])
    click.echo(f"best assignment: {bits} (average {report['average_bitwidth']:.3g} bits)")
    if report["final_accuracy"] is not None:
        click.echo(f"final accuracy after long retrain: {report['final_accuracy']:.4f}")


@main.command("enumerate")
@_with_common
def enumerate_cmd(config_path, **overrides):
    """Exhaustively score every assignment and extract the Pareto frontier."""
    cfg = _run(lambda: _load(config_path, **overrides))
    points = _run(lambda: runner.cmd_enumerate(cfg))
    click.echo(f"enumerated {len(points)} assignments -> {cfg.out_dir}")


@main.command("validate")
@_with_common
@click.option("--search-dir", type=click.Path(file_okay=False), default=None,
              help="Directory holding the search outputs (default: out_dir).")
@click.option("--oracle-dir", type=click.Path(file_okay=False), default=None,
              help="Directory holding the enumeration outputs (default: out_dir).")
def validate(config_path, search_dir, oracle_dir, **overrides):
    """Check the search solution against the enumerated Pareto frontier."""
    cfg = _run(lambda: _load(config_path, **overrides))
    report = _run(lambda: runner.cmd_validate(cfg, search_dir, oracle_dir))
    status = "PASS" if report.passed else "FAIL"
    click.echo(
        f"{status}: solution quant={report.solution.quant:.4f} acc={report.solution.acc:.4f} "
        f"(nearest frontier point quant={report.nearest.quant:.4f} acc={report.nearest.acc:.4f})"
    )
    if not report.passed:
        sys.exit(EXIT_VALIDATION)


@main.command("report")
@click.argument("run_dirs", nargs=-1, required=True, type=click.Path(file_okay=False, exists=True))
@click.option("--out", required=True, type=click.Path(file_okay=False))
def report(run_dirs, out):
    """Emit plot-data CSV bundles from one or more finished runs."""
    produced = _run(lambda: runner.cmd_report(list(run_dirs), out))
    for path in produced:
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
