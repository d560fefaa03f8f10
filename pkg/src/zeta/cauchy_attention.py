"""Sparse Adaptive Cauchy-Softmax attention: forward pass and analytic gradients.

Each query ``i`` attends to its selected key set plus one smoothing slot whose
key and value are the running (inclusive) means of ``K`` and ``V`` up to ``i``.
Scores are inverse quadratic distances::

    S_ij = 1 / (||q_i - k_j||^2 + eps),   eps = sigmoid(theta)

normalized over the attended slots. Top-k indices are constants in the
backward pass; gradient reaches unselected past tokens only through the
smoothing slot.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import morton
from .numerics import ShapeError, as_matrix
from .topk_index import SearchBudget, TopKSelection, build_index, select_topk, to_padded


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@dataclass
class AttentionParams:
    d_K: int = 3
    d_V: int = 64
    M: int = 8
    k: int = 8
    theta: float = 0.0
    bits: int | None = None  # None -> floor(63 / d_K)

    def gamma_sq(self) -> float:
        return sigmoid(self.theta)

    @property
    def budget(self) -> SearchBudget:
        return SearchBudget(self.k, self.M)


@dataclass
class ForwardCache:
    Q: np.ndarray
    K: np.ndarray
    V: np.ndarray
    sel: np.ndarray  # (N, S) gathered key rows; last column is the smoothing slot
    valid: np.ndarray  # (N, S); False for padding
    k_mean: np.ndarray
    v_mean: np.ndarray
    D: np.ndarray
    delta: np.ndarray
    S: np.ndarray
    Z: np.ndarray
    A: np.ndarray
    O: np.ndarray
    eps: float


@dataclass
class GradBundle:
    dQ: np.ndarray
    dK: np.ndarray
    dV: np.ndarray
    dTheta: float
    dEps: float


def prefix_means(X) -> np.ndarray:
    X = as_matrix(X, "X")
    return np.cumsum(X, axis=0) / np.arange(1, X.shape[0] + 1)[:, None]


def _suffix_sum(X: np.ndarray) -> np.ndarray:
    return np.cumsum(X[::-1], axis=0)[::-1]


def _padded(selections, n: int) -> np.ndarray:
    if isinstance(selections, np.ndarray):
        sel = selections.astype(np.int64, copy=False)
    else:
        sel = to_padded(list(selections))
    if sel.ndim != 2 or sel.shape[0] != n:
        raise ShapeError(f"need one selection per query ({n}), got shape {sel.shape}")
    if sel.size and sel.max() >= n:
        raise IndexError(f"selection index {int(sel.max())} out of range for N={n}")
    return sel


def _slot_rows(X: np.ndarray, X_mean: np.ndarray, idx: np.ndarray, s: int) -> np.ndarray:
    return X_mean if s == idx.shape[1] else X[idx[:, s]]


def forward(Q_low, K_low, V, selections: np.ndarray | Sequence[TopKSelection], params: AttentionParams):
    """Attention output ``O`` (N x d_V) and the cache needed by :func:`backward`."""
    Q = as_matrix(Q_low, "Q")
    K = as_matrix(K_low, "K")
    V = as_matrix(V, "V")
    n = Q.shape[0]
    if K.shape != Q.shape or V.shape[0] != n:
        raise ShapeError(f"inconsistent shapes Q{Q.shape} K{K.shape} V{V.shape}")
    sel = _padded(selections, n)
    valid_k = sel >= 0
    idx = np.where(valid_k, sel, 0)
    n_slots = idx.shape[1] + 1
    valid = np.concatenate([valid_k, np.ones((n, 1), dtype=bool)], axis=1)
    k_mean = prefix_means(K)
    v_mean = prefix_means(V)
    eps = params.gamma_sq()

    D = np.empty((n, n_slots))
    for s in range(n_slots):
        diff = Q - _slot_rows(K, k_mean, idx, s)
        D[:, s] = np.einsum("ij,ij->i", diff, diff)
    delta = D + eps
    S = np.where(valid, 1.0 / delta, 0.0)
    Z = S.sum(axis=1)
    A = S / Z[:, None]
    O = np.zeros((n, V.shape[1]))
    for s in range(n_slots):
        O += A[:, s, None] * _slot_rows(V, v_mean, idx, s)
    cache = ForwardCache(Q, K, V, idx, valid, k_mean, v_mean, D, delta, S, Z, A, O, eps)
    return O, cache


def backward(cache: ForwardCache, dO, params: AttentionParams) -> GradBundle:
    G = as_matrix(dO, "dO")
    if G.shape != cache.O.shape:
        raise ShapeError(f"dO shape {G.shape} != output shape {cache.O.shape}")
    Q, K, V, idx = cache.Q, cache.K, cache.V, cache.sel
    n_slots = idx.shape[1] + 1
    dQ = np.zeros_like(Q)
    dK = np.zeros_like(K)
    dV = np.zeros_like(V)
    dK_mean = np.zeros_like(K)
    dV_mean = np.zeros_like(V)
    d_eps = 0.0
    for s in range(n_slots):
        ks = _slot_rows(K, cache.k_mean, idx, s)
        vs = _slot_rows(V, cache.v_mean, idx, s)
        valid = cache.valid[:, s]
        # c_is = dL/do_i . (v_s - o_i) / (Z_i * delta_is^2)
        c = np.einsum("ij,ij->i", G, vs - cache.O) / (cache.Z * cache.delta[:, s] ** 2)
        c = np.where(valid, c, 0.0)
        qk = Q - ks
        dQ -= 2.0 * c[:, None] * qk
        gk = 2.0 * c[:, None] * qk
        gv = cache.A[:, s, None] * G
        d_eps -= float(c.sum())
        if s == n_slots - 1:
            dK_mean += gk
            dV_mean += gv
        else:
            rows = np.nonzero(valid)[0]
            np.add.at(dK, idx[rows, s], gk[rows])
            np.add.at(dV, idx[rows, s], gv[rows])
    inv_count = 1.0 / np.arange(1, Q.shape[0] + 1)[:, None]
    dK += _suffix_sum(dK_mean * inv_count)
    dV += _suffix_sum(dV_mean * inv_count)
    sig = params.gamma_sq()
    return GradBundle(dQ, dK, dV, d_eps * sig * (1.0 - sig), d_eps)


def select(Q_low, K_low, params: AttentionParams, cfg: morton.QuantizationConfig | None = None, threads: int = 1) -> np.ndarray:
    """Morton-encode, index and retrieve; padded ``(N, k)`` selection array.

    Without ``cfg`` the quantization box is fit to the keys and queries jointly,
    which makes every selection depend on the whole sequence. Pass a fixed
    ``cfg`` when strict causality of the codes matters.
    """
    Q = as_matrix(Q_low, "Q")
    K = as_matrix(K_low, "K")
    if cfg is None:
        cfg = morton.fit_config(np.vstack([K, Q]), params.bits)
    k_codes = morton.encode_batch(K, cfg)
    q_codes = morton.encode_batch(Q, cfg)
    index = build_index(k_codes, params.M)
    return select_topk(index, q_codes, params.budget, threads=threads)


def attend(Q_low, K_low, V, params: AttentionParams, cfg: morton.QuantizationConfig | None = None,
           threads: int = 1, return_cache: bool = False):
    sel = select(Q_low, K_low, params, cfg=cfg, threads=threads)
    O, cache = forward(Q_low, K_low, V, sel, params)
    return (O, cache) if return_cache else O
