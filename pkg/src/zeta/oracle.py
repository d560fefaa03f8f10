"""Dense O(N^2) reference attention and the Euclidean-vs-dot-product house demo."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .cauchy_attention import AttentionParams, prefix_means
from .numerics import ParameterError, ShapeError, as_matrix

INV_EUCLID_STAB = 1e-6


class SoftmaxVariant(str, enum.Enum):
    CAUCHY = "cauchy"
    NEGATIVE_EUCLIDEAN_EXP = "negative_euclidean_exp"
    INVERSE_EUCLIDEAN = "inverse_euclidean"
    DOT_PRODUCT = "dot_product"


def _scores(D, dots, variant: SoftmaxVariant, eps: float, d_K: int, exp_shift=None):
    """Unnormalized scores; ``exp_shift`` is subtracted inside exp() for the exp variants."""
    if variant is SoftmaxVariant.CAUCHY:
        return 1.0 / (D + eps)
    if variant is SoftmaxVariant.INVERSE_EUCLIDEAN:
        return 1.0 / (np.sqrt(D) + INV_EUCLID_STAB)
    if variant is SoftmaxVariant.NEGATIVE_EUCLIDEAN_EXP:
        logit = -D
    elif variant is SoftmaxVariant.DOT_PRODUCT:
        logit = dots / np.sqrt(d_K)
    else:
        raise ParameterError(f"unknown variant {variant!r}")
    return np.exp(logit if exp_shift is None else logit - exp_shift)


def _exp_logits(D, dots, variant: SoftmaxVariant, d_K: int):
    if variant is SoftmaxVariant.NEGATIVE_EUCLIDEAN_EXP:
        return -D
    if variant is SoftmaxVariant.DOT_PRODUCT:
        return dots / np.sqrt(d_K)
    return None


def dense_causal_weights(Q_low, K_low, variant=SoftmaxVariant.CAUCHY, params: AttentionParams | None = None,
                         rows: slice | None = None) -> np.ndarray:
    """``(n_rows, N + 1)`` weights: strictly earlier positions, then the smoothing slot."""
    params = params or AttentionParams()
    variant = SoftmaxVariant(variant)
    Q = as_matrix(Q_low, "Q")
    K = as_matrix(K_low, "K")
    n, d_K = Q.shape
    rows = rows or slice(0, n)
    r = np.arange(n)[rows]
    q = Q[rows]
    k_mean = prefix_means(K)[rows]
    dots = q @ K.T
    D = np.zeros_like(dots)
    for j in range(d_K):
        D += (q[:, j, None] - K[None, :, j]) ** 2
    D_mean = ((q - k_mean) ** 2).sum(1)
    dots_mean = (q * k_mean).sum(1)
    future = np.arange(n)[None, :] >= r[:, None]
    shift = None
    logit = _exp_logits(D, dots, variant, d_K)
    if logit is not None:
        logit_mean = _exp_logits(D_mean, dots_mean, variant, d_K)
        shift = np.maximum(np.where(future, -np.inf, logit).max(axis=1), logit_mean)
    eps = params.gamma_sq()
    S = _scores(D, dots, variant, eps, d_K, None if shift is None else shift[:, None])
    S[future] = 0.0
    S_mean = _scores(D_mean, dots_mean, variant, eps, d_K, shift)
    w = np.concatenate([S, S_mean[:, None]], axis=1)
    w /= w.sum(axis=1, keepdims=True)
    return w


def dense_causal_attention(Q_low, K_low, V, variant=SoftmaxVariant.CAUCHY, params: AttentionParams | None = None,
                           block: int | None = None) -> np.ndarray:
    """Every query ``i`` attends to all ``j < i`` plus the smoothing slot.

    ``block`` processes query rows in tiles to bound peak memory; results are
    identical to the untiled computation.
    """
    Q = as_matrix(Q_low, "Q")
    K = as_matrix(K_low, "K")
    V = as_matrix(V, "V")
    n = Q.shape[0]
    if n == 0:
        raise ParameterError("empty sequence")
    if K.shape != Q.shape or V.shape[0] != n:
        raise ShapeError(f"inconsistent shapes Q{Q.shape} K{K.shape} V{V.shape}")
    v_mean = prefix_means(V)
    block = block or n
    out = np.empty((n, V.shape[1]))
    for a in range(0, n, block):
        rows = slice(a, min(a + block, n))
        w = dense_causal_weights(Q, K, variant, params, rows)
        out[rows] = w[:, :n] @ V + w[:, n, None] * v_mean[rows]
    return out


HOUSES = {
    "A": (1500.0, 3.0, 2.0, 10.0, 20.0),
    "B": (1600.0, 3.0, 2.0, 8.0, 18.0),
    "C": (3000.0, 5.0, 4.0, 5.0, 5.0),
    "D": (900.0, 2.0, 1.0, 12.0, 25.0),
}
HOUSE_PRICES = {"A": 310_000, "B": 300_000, "C": 600_000, "D": 200_000}
HOUSE_ATTRIBUTES = ("size_sqft", "bedrooms", "bathrooms", "miles_to_center", "age_years")


@dataclass(frozen=True)
class MetricRow:
    name: str
    euclidean: float
    dot: float


@dataclass(frozen=True)
class MetricDemo:
    rows: tuple[MetricRow, ...]
    nearest_euclidean: str
    max_dot: str


def metric_demo(query, candidates, names=None) -> MetricDemo:
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    C = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    if C.shape[1] != q.size:
        raise ShapeError(f"query has {q.size} dims, candidates {C.shape[1]}")
    names = list(names) if names is not None else [str(i) for i in range(C.shape[0])]
    dist = np.sqrt(((C - q) ** 2).sum(1))
    dots = C @ q
    rows = tuple(MetricRow(n, float(d), float(p)) for n, d, p in zip(names, dist, dots))
    return MetricDemo(rows, names[int(np.argmin(dist))], names[int(np.argmax(dots))])


def zscore(X, ddof: int = 0) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return (X - X.mean(0)) / X.std(0, ddof=ddof)


def house_demo(ddof: int = 0) -> MetricDemo:
    """House A against B, C, D after z-scoring every attribute over the four houses."""
    Z = zscore(np.array(list(HOUSES.values())), ddof=ddof)
    return metric_demo(Z[0], Z[1:], names=["B", "C", "D"])
