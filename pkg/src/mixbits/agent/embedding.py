"""Per-step observation vector fed to the policy and value networks.

Fixed 7-entry layout: normalized layer index, log-normalized weight and
MAcc counts, weight standard deviation, normalized current bitwidth,
then the two network-wide dynamics (quantization state and relative
accuracy).
"""

import numpy as np

from ..nn.network import LayerSpec

EMBEDDING_DIM = 7

_LOG_NORM = 7.0  # log10 of the count that maps to 1.0


def _log_norm(count: int) -> float:
    return float(np.clip(np.log10(max(count, 1)) / _LOG_NORM, 0.0, 1.2))


def embed_state(
    layer: LayerSpec,
    bits_now: int,
    quant_state: float,
    acc_state: float,
    n_layers: int,
    max_bits: int,
) -> np.ndarray:
    """Deterministic embedding of one layer-decision step."""
    return np.array(
        [
            layer.index / n_layers,
            _log_norm(layer.n_weights),
            _log_norm(layer.n_macc),
            layer.weight_std,
            bits_now / max_bits,
            quant_state,
            acc_state,
        ],
        dtype=np.float64,
    )
