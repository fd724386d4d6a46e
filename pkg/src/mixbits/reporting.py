"""CSV log schemas, run manifests, and figure-data bundles.

All CSVs use comma separation, a header row, '.' decimals, and LF line
endings; floats are written with repr so reruns are byte-identical.
"""

import csv
import hashlib
import json
import time
from pathlib import Path

from .env import EpisodeLog
from .errors import DatasetError

TOOL_VERSION = "0.1.0"
MOVING_AVERAGE_WINDOW = 50


def _fmt(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


class EpisodeCsvWriter:
    """Incrementally flushed episode metrics plus per-layer action probabilities."""

    def __init__(self, episodes_path, policy_path, n_layers: int, bitwidth_set):
        self.bitwidth_set = list(bitwidth_set)
        self._episodes_fh = Path(episodes_path).open("w", newline="")
        self._policy_fh = Path(policy_path).open("w", newline="")
        self._episodes = csv.writer(self._episodes_fh, lineterminator="\n")
        self._policy = csv.writer(self._policy_fh, lineterminator="\n")
        self._episodes.writerow(
            ["episode", "mean_reward", "final_reward", "state_quant", "state_acc"]
            + [f"bits_{i}" for i in range(n_layers)]
        )
        self._policy.writerow(
            ["episode"]
            + [f"p_layer{i}_bits{b}" for i in range(n_layers) for b in self.bitwidth_set]
        )

    def append(self, log: EpisodeLog) -> None:
        self._episodes.writerow(
            [log.episode, _fmt(log.mean_reward), _fmt(log.final_reward),
             _fmt(log.quant_state), _fmt(log.acc_state)]
            + [str(b) for b in log.bits]
        )
        probs = [p for dist in log.distributions for p in dist]
        self._policy.writerow([log.episode] + [_fmt(p) for p in probs])
        self._episodes_fh.flush()
        self._policy_fh.flush()

    def close(self) -> None:
        self._episodes_fh.close()
        self._policy_fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_episode_csv(path) -> list[dict]:
    """Rows of episodes.csv as dicts; raises naming the offending row."""
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        for i, row in enumerate(reader):
            try:
                rows.append(
                    {
                        "episode": int(row["episode"]),
                        "mean_reward": float(row["mean_reward"]),
                        "final_reward": float(row["final_reward"]),
                        "state_quant": float(row["state_quant"]),
                        "state_acc": float(row["state_acc"]),
                    }
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"{path}: malformed CSV row {i + 2}: {exc}") from exc
    if not rows:
        raise DatasetError(f"{path}: no episode rows")
    return rows


def write_reward_curve(rows: list[dict], path, window: int = MOVING_AVERAGE_WINDOW) -> None:
    """reward-vs-episode with a trailing moving average from row `window` on."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["episode", "reward", f"moving_avg_{window}"])
        rewards = [r["final_reward"] for r in rows]
        for i, row in enumerate(rows):
            if i + 1 >= window:
                avg = _fmt(sum(rewards[i + 1 - window : i + 1]) / window)
            else:
                avg = ""
            writer.writerow([row["episode"], _fmt(rewards[i]), avg])


def write_formulation_comparison(series: dict[str, list[dict]], path) -> None:
    """Side-by-side relative-accuracy evolution for one or more runs."""
    labels = list(series)
    length = max(len(rows) for rows in series.values())
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["episode"] + [f"{label}_state_acc" for label in labels])
        for i in range(length):
            out = [str(i)]
            for label in labels:
                rows = series[label]
                out.append(_fmt(rows[i]["state_acc"]) if i < len(rows) else "")
            writer.writerow(out)


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir, command: str, config_digest: str, seed: int, files: list[str]) -> Path:
    """Record what a command produced, with content digests per output file."""
    out_dir = Path(out_dir)
    manifest = {
        "command": command,
        "tool_version": TOOL_VERSION,
        "config_digest": config_digest,
        "seed": seed,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "files": {name: sha256_file(out_dir / name) for name in sorted(files)},
    }
    path = out_dir / f"manifest_{command}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
