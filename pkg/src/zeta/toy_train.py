"""Multi-query associative recall (MQAR) with a one-layer ZETA model, trained by hand.

Model, per sequence of tokens ``t_0 .. t_{N-1}``::

    x_i = [E[t_i], E[t_{i-1}]]               (E[t_{-1}] = 0; fixed embedding table)
    q_i = x_i W_q,  k_i = x_i W_k,  v_i = x_i W_v
    o   = zeta_attention(q, k, v)            (Cauchy scores, chunked top-k + mean slot)
    y_i = o_i W_out                          (compared with E[target_i] at probe positions)

The previous-token half of ``x`` lets a single attention layer link a probe key
to the position holding the value that followed it. All gradients are
written out by hand; the top-k selection is held fixed within a step.

Quantization bounds come from the weights (a Cauchy-Schwarz bound on every
reachable projection), never from the sequence, so codes at position ``i``
cannot depend on tokens after ``i``.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import cauchy_attention as ca
from . import morton
from .numerics import AdamState, ParameterError, adam_step, make_rng

log = logging.getLogger(__name__)


@dataclass
class MqarConfig:
    vocab: int = 16
    n_pairs: int = 8
    seq_len: int = 64
    d_emb: int = 32  # d_model = 2 * d_emb
    d_K: int = 3
    d_V: int = 64
    k: int = 8
    M: int = 8
    batch: int = 8
    bits: int | None = None

    @property
    def d_model(self) -> int:
        return 2 * self.d_emb

    def __post_init__(self):
        if self.vocab < 4 or self.vocab % 2:
            raise ParameterError("vocab must be even and >= 4 (keys and values split it)")
        if not 1 <= self.n_pairs <= self.vocab // 2:
            raise ParameterError(f"n_pairs must be in [1, {self.vocab // 2}]")
        if self.seq_len < 2 * self.n_pairs + 1:
            raise ParameterError("seq_len must leave room for at least one probe")


@dataclass
class MqarInstance:
    tokens: np.ndarray
    probe_positions: np.ndarray
    targets: np.ndarray  # value token expected at each probe position


def generate_mqar(rng: np.random.Generator, vocab: int, n_pairs: int, seq_len: int) -> MqarInstance:
    """``k1 v1 k2 v2 ... kP vP`` followed by probes drawn from the stored keys.

    Keys come from the lower half of the vocabulary (distinct within a
    sequence), values from the upper half.
    """
    if seq_len < 2 * n_pairs + 1 or n_pairs < 1 or n_pairs > vocab // 2:
        raise ParameterError(f"infeasible MQAR sizes vocab={vocab} n_pairs={n_pairs} seq_len={seq_len}")
    half = vocab // 2
    keys = rng.permutation(half)[:n_pairs]
    values = rng.integers(half, vocab, size=n_pairs)
    pick = rng.integers(0, n_pairs, size=seq_len - 2 * n_pairs)
    tokens = np.concatenate([np.stack([keys, values], axis=1).reshape(-1), keys[pick]])
    probes = np.arange(2 * n_pairs, seq_len)
    return MqarInstance(tokens.astype(np.int64), probes, values[pick].astype(np.int64))


@dataclass
class ModelParams:
    W_q: np.ndarray
    W_k: np.ndarray
    W_v: np.ndarray
    W_out: np.ndarray
    theta: float
    embedding: np.ndarray  # frozen

    TRAINABLE = ("W_q", "W_k", "W_v", "W_out", "theta")

    def copy(self) -> "ModelParams":
        return ModelParams(self.W_q.copy(), self.W_k.copy(), self.W_v.copy(), self.W_out.copy(),
                           float(self.theta), self.embedding)


def init_model(cfg: MqarConfig, seed: int) -> ModelParams:
    rng = make_rng(seed)
    E = rng.normal(0.0, 1.0 / math.sqrt(cfg.d_emb), size=(cfg.vocab, cfg.d_emb))
    s = 1.0 / math.sqrt(cfg.d_model)
    return ModelParams(
        W_q=rng.normal(0.0, s, size=(cfg.d_model, cfg.d_K)),
        W_k=rng.normal(0.0, s, size=(cfg.d_model, cfg.d_K)),
        W_v=rng.normal(0.0, s, size=(cfg.d_model, cfg.d_V)),
        W_out=rng.normal(0.0, 1.0 / math.sqrt(cfg.d_V), size=(cfg.d_V, cfg.d_emb)),
        theta=0.0,
        embedding=E,
    )


def input_states(model: ModelParams, tokens) -> np.ndarray:
    E = model.embedding
    cur = E[np.asarray(tokens)]
    prev = np.vstack([np.zeros((1, E.shape[1])), cur[:-1]])
    return np.hstack([cur, prev])


def quant_config(model: ModelParams, cfg: MqarConfig) -> morton.QuantizationConfig:
    """Box containing every projection of an input state of norm <= sqrt(2) * max |E[v]|."""
    radius = math.sqrt(2.0) * float(np.linalg.norm(model.embedding, axis=1).max())
    col = np.maximum(np.linalg.norm(model.W_q, axis=0), np.linalg.norm(model.W_k, axis=0))
    bound = np.maximum(radius * col, 1e-12)
    return morton.QuantizationConfig.symmetric(bound, cfg.bits)


def _attn_params(model: ModelParams, cfg: MqarConfig) -> ca.AttentionParams:
    return ca.AttentionParams(d_K=cfg.d_K, d_V=cfg.d_V, M=cfg.M, k=cfg.k, theta=model.theta, bits=cfg.bits)


def forward_states(model: ModelParams, X: np.ndarray, cfg: MqarConfig, sel: np.ndarray | None = None):
    """Readout ``Y`` for input states ``X``; ``sel`` overrides the retrieved top-k."""
    Q = X @ model.W_q
    K = X @ model.W_k
    V = X @ model.W_v
    p = _attn_params(model, cfg)
    if sel is None:
        sel = ca.select(Q, K, p, cfg=quant_config(model, cfg))
    O, cache = ca.forward(Q, K, V, sel, p)
    return O @ model.W_out, (X, O, cache, sel)


def loss_and_grads(model: ModelParams, batch: list[MqarInstance], cfg: MqarConfig,
                   sels: list[np.ndarray] | None = None):
    """Mean squared readout error over all probes of the batch, and its gradients."""
    grads = {name: np.zeros_like(getattr(model, name)) for name in ModelParams.TRAINABLE[:-1]}
    grads["theta"] = 0.0
    n_probes = sum(inst.probe_positions.size for inst in batch)
    total = 0.0
    used = []
    p = _attn_params(model, cfg)
    for b, inst in enumerate(batch):
        X = input_states(model, inst.tokens)
        Y, (X, O, cache, sel) = forward_states(model, X, cfg, None if sels is None else sels[b])
        used.append(sel)
        err = np.zeros_like(Y)
        err[inst.probe_positions] = Y[inst.probe_positions] - model.embedding[inst.targets]
        total += float((err * err).sum())
        dY = 2.0 * err / n_probes
        grads["W_out"] += O.T @ dY
        g = ca.backward(cache, dY @ model.W_out.T, p)
        grads["W_q"] += X.T @ g.dQ
        grads["W_k"] += X.T @ g.dK
        grads["W_v"] += X.T @ g.dV
        grads["theta"] += g.dTheta
    return total / n_probes, grads, used


@dataclass
class TrainResult:
    model: ModelParams
    losses: list[float] = field(default_factory=list)


def train(model: ModelParams, cfg: MqarConfig, steps: int, lr: float, seed: int = 0,
          resample: bool = True) -> TrainResult:
    """Adam on all trainable parameters; a fresh batch per step unless ``resample`` is off."""
    model = model.copy()
    rng = make_rng(seed)
    states = {}
    for name in ModelParams.TRAINABLE:
        shape = np.shape(getattr(model, name))
        states[name] = AdamState(shape, lr=lr)
    result = TrainResult(model)
    batch = None
    for step in range(steps):
        if resample or batch is None:
            batch = [generate_mqar(rng, cfg.vocab, cfg.n_pairs, cfg.seq_len) for _ in range(cfg.batch)]
        loss, grads, _ = loss_and_grads(model, batch, cfg)
        if not math.isfinite(loss):
            raise FloatingPointError(f"non-finite loss {loss} at step {step} (theta={model.theta})")
        result.losses.append(loss)
        for name in ModelParams.TRAINABLE:
            new = adam_step(states[name], getattr(model, name), grads[name])
            setattr(model, name, float(new) if name == "theta" else new)
        if step % 50 == 0:
            log.info("step %d loss %.5f gamma^2 %.4f", step, loss, ca.sigmoid(model.theta))
    return result


def predict(model: ModelParams, inst: MqarInstance, cfg: MqarConfig) -> np.ndarray:
    Y, _ = forward_states(model, input_states(model, inst.tokens), cfg)
    return Y[inst.probe_positions]


def decode(embedding: np.ndarray, Y: np.ndarray) -> np.ndarray:
    d = ((Y[:, None, :] - embedding[None, :, :]) ** 2).sum(-1)
    return np.argmin(d, axis=1)


def eval_accuracy(model, instances: list[MqarInstance], cfg: MqarConfig, predictor=None) -> float:
    """Fraction of probes whose nearest embedding matches the target token.

    ``predictor(inst) -> (n_probes, d_emb)`` replaces the model forward when given.
    """
    predictor = predictor or (lambda inst: predict(model, inst, cfg))
    hits = total = 0
    for inst in instances:
        guess = decode(model.embedding, predictor(inst))
        hits += int((guess == inst.targets).sum())
        total += inst.targets.size
    return hits / total if total else 0.0


def smoothed_ratio(losses: list[float], window: int = 20) -> float:
    """Mean of the last ``window`` losses over the mean of the first ``window``."""
    return float(np.mean(losses[-window:]) / np.mean(losses[:window]))


def loss_csv(losses: list[float], accuracy: float | None = None) -> str:
    buf = io.StringIO()
    buf.write("step,loss\n")
    for i, l in enumerate(losses):
        buf.write(f"{i},{l:.8f}\n")
    if accuracy is not None:
        buf.write(f"accuracy={accuracy:.6f}\n")
    return buf.getvalue()
