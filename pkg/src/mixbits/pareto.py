"""Exhaustive assignment-space enumeration and Pareto-frontier analysis.

Lower quantization state and higher relative accuracy are both better;
the frontier is the set of assignments no other assignment beats on
both axes.
"""

import csv
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import rng as rng_mod
from .cost import CostParams, QuantAssignment, state_of_quantization
from .errors import DatasetError, SpaceTooLargeError
from .nn.data import Dataset
from .nn.network import NetworkSpec, Weights
from .nn.train import TrainConfig, finetune_and_estimate

DEFAULT_SPACE_CAP = 10_000


@dataclass(frozen=True)
class ParetoPoint:
    assignment: QuantAssignment
    quant: float
    acc: float


@dataclass
class ValidationReport:
    passed: bool
    solution: ParetoPoint
    nearest: ParetoPoint
    quant_distance: float
    acc_distance: float
    eps_quant: float
    eps_acc: float


def enumerate_space(
    spec: NetworkSpec,
    weights: Weights,
    bitwidth_set: Sequence[int],
    cost_params: CostParams,
    train_data: Dataset,
    val_data: Dataset,
    short_cfg: TrainConfig,
    short_epochs: int,
    *,
    train_subsample: int = 1000,
    eval_subsample: int = 1000,
    seed: int = 0,
    cap: int = DEFAULT_SPACE_CAP,
    jobs: int = 1,
) -> list[ParetoPoint]:
    """Finetune and score every assignment in bitwidth_set^n_layers.

    Each point starts from the same pretrained weights and gets the same
    short budget the search environment uses, so oracle accuracies and
    episode estimates are commensurable. Deterministic given the seed:
    per-assignment child streams make results independent of execution
    order, so worker threads never change the output.
    """
    bits = sorted(int(b) for b in bitwidth_set)
    size = len(bits) ** spec.n_layers
    if size > cap:
        raise SpaceTooLargeError(
            f"{len(bits)}^{spec.n_layers} = {size} assignments exceed the cap of {cap}; "
            "restrict the bitwidth set or raise the cap"
        )
    if spec.full_precision_accuracy is None:
        raise DatasetError("baseline accuracy missing: train the full-precision network first")
    eval_rng = rng_mod.stream(seed, "env/eval-subsample")
    val_subset = val_data.subsample(eval_subsample, eval_rng)
    assignments = [QuantAssignment(combo) for combo in itertools.product(bits, repeat=spec.n_layers)]

    def score(assignment: QuantAssignment) -> ParetoPoint:
        key = "-".join(str(b) for b in assignment)
        a_rng = rng_mod.stream(seed, f"enumerate/{key}")
        subset = train_data.subsample(train_subsample, a_rng)
        cfg = TrainConfig(
            learning_rate=short_cfg.learning_rate,
            epochs=short_cfg.epochs,
            batch_size=short_cfg.batch_size,
            lambda_q=short_cfg.lambda_q,
            lambda_wd=short_cfg.lambda_wd,
            sinreq_bits=short_cfg.sinreq_bits,
            seed=int(a_rng.integers(0, 2**62)),
        )
        acc, _ = finetune_and_estimate(
            spec, weights, assignment, subset, val_subset, cfg, short_epochs
        )
        quant = state_of_quantization(spec, assignment, cost_params)
        return ParetoPoint(assignment, quant, acc / spec.full_precision_accuracy)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(score, assignments))
    else:
        points = [score(a) for a in assignments]
    points.sort(key=lambda p: p.assignment.bits)
    return points


def is_dominated(p: ParetoPoint, q: ParetoPoint) -> bool:
    """True iff q is at least as good on both axes and strictly better on one."""
    return q.quant <= p.quant and q.acc >= p.acc and (q.quant < p.quant or q.acc > p.acc)


def pareto_frontier(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    """Non-dominated subset, sorted by ascending quantization state.

    Exact (quant, acc) duplicates keep only the lexicographically
    smallest assignment, so output is deterministic.
    """
    if not points:
        raise DatasetError("pareto_frontier needs at least one point")
    ordered = sorted(points, key=lambda p: (p.quant, -p.acc, p.assignment.bits))
    frontier: list[ParetoPoint] = []
    best_acc = -float("inf")
    for p in ordered:
        if p.acc > best_acc:
            frontier.append(p)
            best_acc = p.acc
    return frontier


def validate_solution(
    solution: ParetoPoint,
    frontier: Sequence[ParetoPoint],
    eps_quant: float,
    eps_acc: float,
) -> ValidationReport:
    """PASS iff the solution is within tolerance of some frontier point.

    A frontier point f admits the solution when solution.quant <=
    f.quant + eps_quant and solution.acc >= f.acc - eps_acc.
    """
    if not frontier:
        raise DatasetError("validate_solution needs a nonempty frontier")
    passed = any(
        solution.quant <= f.quant + eps_quant and solution.acc >= f.acc - eps_acc for f in frontier
    )
    nearest = min(frontier, key=lambda f: (f.quant - solution.quant) ** 2 + (f.acc - solution.acc) ** 2)
    return ValidationReport(
        passed=passed,
        solution=solution,
        nearest=nearest,
        quant_distance=solution.quant - nearest.quant,
        acc_distance=solution.acc - nearest.acc,
        eps_quant=eps_quant,
        eps_acc=eps_acc,
    )


def write_points(points: Sequence[ParetoPoint], path) -> None:
    """CSV rows of (dash-joined assignment, quant, acc)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["assignment", "state_quant", "relative_acc"])
        for p in points:
            writer.writerow(["-".join(str(b) for b in p.assignment), repr(p.quant), repr(p.acc)])


def read_points(path) -> list[ParetoPoint]:
    path = Path(path)
    points = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        for i, row in enumerate(reader):
            try:
                assignment = QuantAssignment(int(b) for b in row["assignment"].split("-"))
                points.append(ParetoPoint(assignment, float(row["state_quant"]), float(row["relative_acc"])))
            except (KeyError, ValueError, TypeError) as exc:
                raise DatasetError(f"{path}: malformed CSV row {i + 2}: {exc}") from exc
    if not points:
        raise DatasetError(f"{path}: no points found")
    return points
