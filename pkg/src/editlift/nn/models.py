"""The two fixed architectures: a feed-forward binary classifier and a
bidirectional GRU sequence classifier with attention pooling.

Both expose a flat parameter dict plus loss_and_grads(), which is the whole
contract the optimizer and the gradient checker need.
"""

from __future__ import annotations

import numpy as np

from .layers import (
    ACTIVATIONS,
    AttentionHead,
    DenseLayer,
    GruCell,
    backward_dense,
    forward_dense,
    xavier_uniform,
    EPS,
    _sigmoid,
)


class Mlp:
    """Fully-connected sigmoid-output classifier (or plain regressor).

    `l2_penalty` adds penalty = lambda * sum(W^2) over the weights of the
    layer at `l2_layer` (default: the last hidden layer) to the training
    loss; its gradient contribution is 2 * lambda * W.
    """

    def __init__(self, layer_sizes, activations=None, seed: int = 0,
                 loss: str = "bce", l2_penalty: float = 0.0, l2_layer: int | None = None):
        if len(layer_sizes) < 2:
            raise ValueError("layer_sizes needs at least input and output sizes")
        n_layers = len(layer_sizes) - 1
        if activations is None:
            activations = ["relu"] * (n_layers - 1) + ["sigmoid" if loss == "bce" else "identity"]
        if len(activations) != n_layers:
            raise ValueError("one activation per layer required")
        if loss not in ("bce", "mse"):
            raise ValueError(f"unknown loss {loss!r}")
        rng = np.random.default_rng(seed)
        self.layers = [
            DenseLayer.init(rng, layer_sizes[i], layer_sizes[i + 1], activations[i])
            for i in range(n_layers)
        ]
        self.loss = loss
        self.l2_penalty = float(l2_penalty)
        if l2_layer is None:
            l2_layer = n_layers - 2 if n_layers >= 2 else 0
        self.l2_layer = int(l2_layer)
        self.seed = seed

    @property
    def params(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            out[f"w{i}"] = layer.weights
            out[f"b{i}"] = layer.bias
        return out

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        for i, layer in enumerate(self.layers):
            layer.weights = np.asarray(params[f"w{i}"], dtype=np.float64)
            layer.bias = np.asarray(params[f"b{i}"], dtype=np.float64)

    def predict(self, x: np.ndarray) -> np.ndarray:
        out = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            out, _ = forward_dense(layer, out)
        return out[:, 0] if out.shape[-1] == 1 else out

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        n = x.shape[0]

        caches = []
        out = x
        for layer in self.layers:
            out, cache = forward_dense(layer, out)
            caches.append(cache)
        pred = out[:, 0]

        if self.loss == "bce":
            p = np.clip(pred, EPS, 1.0 - EPS)
            value = float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))
            if self.layers[-1].activation == "sigmoid":
                # combined sigmoid+BCE gradient w.r.t. the pre-activation
                dz_last = ((pred - y) / n)[:, None]
                dpred = None
            else:
                dpred = ((p - y) / (p * (1.0 - p)) / n)[:, None]
                dz_last = None
        else:
            diff = pred - y
            value = float(np.mean(diff * diff))
            dpred = (2.0 * diff / n)[:, None]
            dz_last = None

        grads: dict[str, np.ndarray] = {}
        if dz_last is not None:
            x_last, _ = caches[-1]
            grads[f"w{len(self.layers) - 1}"] = x_last.T @ dz_last
            grads[f"b{len(self.layers) - 1}"] = dz_last.sum(axis=0)
            dx = dz_last @ self.layers[-1].weights.T
            rest = range(len(self.layers) - 2, -1, -1)
        else:
            dx = dpred
            rest = range(len(self.layers) - 1, -1, -1)

        for i in rest:
            dx, dw, db = backward_dense(self.layers[i], dx, caches[i])
            grads[f"w{i}"] = dw
            grads[f"b{i}"] = db

        if self.l2_penalty > 0.0:
            w = self.layers[self.l2_layer].weights
            value += self.l2_penalty * float(np.sum(w * w))
            grads[f"w{self.l2_layer}"] = grads[f"w{self.l2_layer}"] + 2.0 * self.l2_penalty * w
        return value, grads


class SequenceClassifier:
    """Token sequences -> sigmoid score, via trainable token vectors, a
    bidirectional GRU, attention pooling, and a dense output unit.

    Sequences are lists/arrays of integer token ids; id 0 is reserved for the
    unknown token.
    """

    UNKNOWN_ID = 0

    def __init__(self, vocab_size: int, embed_size: int = 50, hidden_size: int = 64,
                 attention_size: int | None = None, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.embed = rng.normal(0.0, 0.1, size=(vocab_size, embed_size))
        self.fwd = GruCell.init(rng, embed_size, hidden_size)
        self.bwd = GruCell.init(rng, embed_size, hidden_size)
        if attention_size is None:
            attention_size = hidden_size
        self.attention = AttentionHead.init(rng, 2 * hidden_size, attention_size)
        self.out_w = xavier_uniform(rng, 2 * hidden_size, 1, shape=(2 * hidden_size,))
        self.out_b = np.zeros(1, dtype=np.float64)
        self.vocab_size = vocab_size
        self.embed_size = embed_size
        self.hidden_size = hidden_size
        self.attention_size = attention_size
        self.seed = seed

    @property
    def params(self) -> dict[str, np.ndarray]:
        out = {"embed": self.embed, "out_w": self.out_w, "out_b": self.out_b}
        for prefix, cell in (("f_", self.fwd), ("b_", self.bwd)):
            for gate in ("wz", "wr", "wc", "uz", "ur", "uc", "bz", "br", "bc"):
                out[prefix + gate] = getattr(cell, gate)
        out["a_projection"] = self.attention.projection
        out["a_proj_bias"] = self.attention.proj_bias
        out["a_context"] = self.attention.context
        return out

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        self.embed = np.asarray(params["embed"], dtype=np.float64)
        self.out_w = np.asarray(params["out_w"], dtype=np.float64)
        self.out_b = np.asarray(params["out_b"], dtype=np.float64)
        for prefix, cell in (("f_", self.fwd), ("b_", self.bwd)):
            for gate in ("wz", "wr", "wc", "uz", "ur", "uc", "bz", "br", "bc"):
                setattr(cell, gate, np.asarray(params[prefix + gate], dtype=np.float64))
        self.attention.projection = np.asarray(params["a_projection"], dtype=np.float64)
        self.attention.proj_bias = np.asarray(params["a_proj_bias"], dtype=np.float64)
        self.attention.context = np.asarray(params["a_context"], dtype=np.float64)

    def _forward_batch(self, ids: np.ndarray):
        """ids [B, T] (equal lengths) -> (scores [B], cache)."""
        xs = self.embed[ids].transpose(1, 0, 2)  # [T, B, E]
        fwd_states, fwd_caches = self.fwd.run(xs)
        bwd_states, bwd_caches = self.bwd.run(xs[::-1])
        states = np.concatenate([fwd_states, bwd_states[::-1]], axis=2)  # [T, B, 2H]
        pooled, weights, att_cache = self.attention.forward(states)
        logits = pooled @ self.out_w + self.out_b[0]
        scores = _sigmoid(logits)
        return scores, (ids, fwd_caches, bwd_caches, att_cache, pooled)

    def score_batch(self, sequences) -> np.ndarray:
        """Score a list of variable-length id sequences."""
        scores = np.empty(len(sequences), dtype=np.float64)
        for length, idxs in _group_by_length(sequences).items():
            batch = np.asarray([sequences[i] for i in idxs], dtype=np.int64)
            s, _ = self._forward_batch(batch)
            scores[idxs] = s
        return scores

    def loss_and_grads(self, sequences, labels):
        """Mean BCE over a batch of variable-length sequences, with grads."""
        labels = np.asarray(labels, dtype=np.float64).reshape(-1)
        n = len(sequences)
        grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        total = 0.0
        for length, idxs in _group_by_length(sequences).items():
            batch = np.asarray([sequences[i] for i in idxs], dtype=np.int64)
            y = labels[idxs]
            scores, cache = self._forward_batch(batch)
            p = np.clip(scores, EPS, 1.0 - EPS)
            total += float(np.sum(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))
            # d(loss)/d(logit) for sigmoid+BCE, normalized by the full batch
            dlogits = (scores - y) / n
            self._backward_batch(dlogits, cache, grads)
        return total / n, grads

    def _backward_batch(self, dlogits: np.ndarray, cache, grads: dict):
        ids, fwd_caches, bwd_caches, att_cache, pooled = cache
        grads["out_w"] += pooled.T @ dlogits
        grads["out_b"][0] += dlogits.sum()
        dpooled = dlogits[:, None] * self.out_w[None, :]
        dstates = self.attention.backward(dpooled, att_cache, grads, "a_")
        h = self.hidden_size
        dxs_f = self.fwd.run_backward(dstates[:, :, :h], fwd_caches, grads, "f_")
        dxs_b = self.bwd.run_backward(dstates[::-1, :, h:], bwd_caches, grads, "b_")
        dxs = dxs_f + dxs_b[::-1]  # [T, B, E]
        np.add.at(grads["embed"], ids, dxs.transpose(1, 0, 2))


def _group_by_length(sequences) -> dict[int, list[int]]:
    """Bucket sequence indices by length, insertion-ordered for determinism."""
    groups: dict[int, list[int]] = {}
    for i, seq in enumerate(sequences):
        if len(seq) == 0:
            raise ValueError("cannot process an empty token sequence")
        groups.setdefault(len(seq), []).append(i)
    return groups
