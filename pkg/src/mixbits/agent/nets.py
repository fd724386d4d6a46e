"""Recurrent actor/critic networks with hand-rolled backprop.

Both heads share the same topology family: an LSTM first layer whose
hidden state carries context across the layers of one episode, followed
by tanh dense layers and a linear output. Parameters live in flat name
-> array dicts so the optimizer, checkpoints, and finite-difference
tests can treat them uniformly.
"""

import numpy as np

ParamDict = dict[str, np.ndarray]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class RecurrentNet:
    """LSTM(hidden) -> tanh dense stack -> linear output."""

    def __init__(
        self,
        input_dim: int,
        lstm_hidden: int,
        fc_sizes: tuple[int, ...],
        output_dim: int,
        rng: np.random.Generator,
    ):
        self.input_dim = input_dim
        self.hidden = lstm_hidden
        self.fc_sizes = tuple(fc_sizes)
        self.output_dim = output_dim
        self.params: ParamDict = {}
        h = lstm_hidden

        def glorot(n_in, n_out, shape):
            limit = np.sqrt(6.0 / (n_in + n_out))
            return rng.uniform(-limit, limit, size=shape)

        self.params["lstm.wx"] = glorot(input_dim, h, (input_dim, 4 * h))
        self.params["lstm.wh"] = glorot(h, h, (h, 4 * h))
        bias = np.zeros(4 * h)
        bias[h : 2 * h] = 1.0  # forget-gate bias keeps early memory open
        self.params["lstm.b"] = bias
        prev = h
        for i, size in enumerate(self.fc_sizes):
            self.params[f"fc{i}.w"] = glorot(prev, size, (prev, size))
            self.params[f"fc{i}.b"] = np.zeros(size)
            prev = size
        self.params["out.w"] = glorot(prev, output_dim, (prev, output_dim))
        self.params["out.b"] = np.zeros(output_dim)

    def zero_state(self, batch: int = 1) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros((batch, self.hidden)), np.zeros((batch, self.hidden))

    def _lstm_step(self, x, h_prev, c_prev):
        p = self.params
        hid = self.hidden
        z = x @ p["lstm.wx"] + h_prev @ p["lstm.wh"] + p["lstm.b"]
        i = _sigmoid(z[:, :hid])
        f = _sigmoid(z[:, hid : 2 * hid])
        g = np.tanh(z[:, 2 * hid : 3 * hid])
        o = _sigmoid(z[:, 3 * hid :])
        c = f * c_prev + i * g
        tanh_c = np.tanh(c)
        h = o * tanh_c
        cache = (x, h_prev, c_prev, i, f, g, o, tanh_c)
        return h, c, cache

    def _head(self, h):
        p = self.params
        acts = [h]
        x = h
        for idx in range(len(self.fc_sizes)):
            x = np.tanh(x @ p[f"fc{idx}.w"] + p[f"fc{idx}.b"])
            acts.append(x)
        out = x @ p["out.w"] + p["out.b"]
        return out, acts

    def step(self, x: np.ndarray, state) -> tuple[np.ndarray, tuple]:
        """Single rollout step; x is (batch, input_dim)."""
        h, c, _ = self._lstm_step(x, state[0], state[1])
        out, _ = self._head(h)
        return out, (h, c)

    def forward_seq(self, xs: np.ndarray) -> tuple[np.ndarray, dict]:
        """Run a whole episode; xs is (T, batch, input_dim).

        Hidden state starts at zero, matching rollout behaviour where
        each episode resets the LSTM.
        """
        t_len, batch, _ = xs.shape
        h, c = self.zero_state(batch)
        lstm_caches, head_caches, outs = [], [], []
        for t in range(t_len):
            h, c, cache = self._lstm_step(xs[t], h, c)
            out, acts = self._head(h)
            lstm_caches.append(cache)
            head_caches.append(acts)
            outs.append(out)
        return np.stack(outs), {"lstm": lstm_caches, "head": head_caches}

    def backward_seq(self, caches: dict, douts: np.ndarray) -> ParamDict:
        """Backprop through time for a forward_seq call; returns grad dict."""
        p = self.params
        hid = self.hidden
        grads = {name: np.zeros_like(arr) for name, arr in p.items()}
        t_len = douts.shape[0]
        dh_next = np.zeros((douts.shape[1], hid))
        dc_next = np.zeros_like(dh_next)
        for t in range(t_len - 1, -1, -1):
            acts = caches["head"][t]
            d = douts[t]
            grads["out.w"] += acts[-1].T @ d
            grads["out.b"] += d.sum(axis=0)
            d = d @ p["out.w"].T
            for idx in range(len(self.fc_sizes) - 1, -1, -1):
                d = d * (1.0 - acts[idx + 1] ** 2)
                grads[f"fc{idx}.w"] += acts[idx].T @ d
                grads[f"fc{idx}.b"] += d.sum(axis=0)
                d = d @ p[f"fc{idx}.w"].T
            dh = d + dh_next
            x, h_prev, c_prev, i, f, g, o, tanh_c = caches["lstm"][t]
            do = dh * tanh_c
            dc = dh * o * (1.0 - tanh_c**2) + dc_next
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dc_next = dc * f
            dz = np.concatenate(
                [di * i * (1 - i), df * f * (1 - f), dg * (1 - g**2), do * o * (1 - o)], axis=1
            )
            grads["lstm.wx"] += x.T @ dz
            grads["lstm.wh"] += h_prev.T @ dz
            grads["lstm.b"] += dz.sum(axis=0)
            dh_next = dz @ p["lstm.wh"].T
        return grads


def masked_softmax(logits: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Softmax over the unmasked entries; masked entries get probability 0."""
    z = np.asarray(logits, dtype=np.float64)
    if mask is not None:
        z = np.where(mask, z, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def make_policy_net(input_dim: int, n_actions: int, rng: np.random.Generator) -> RecurrentNet:
    return RecurrentNet(input_dim, 64, (128, 128), n_actions, rng)


def make_value_net(input_dim: int, rng: np.random.Generator) -> RecurrentNet:
    return RecurrentNet(input_dim, 64, (128, 64), 1, rng)
