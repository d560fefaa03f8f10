"""Desk-scale locality experiments: neighbor overlap after Z-order projection and recall vs k."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import morton
from .numerics import ParameterError, make_rng
from .topk_index import SearchBudget, build_index, select_topk


def trial_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, np.uint64)[0])


def _stable_topk(dist: np.ndarray, k: int) -> np.ndarray:
    """Row-wise indices of the k smallest entries, ties to the smaller column."""
    return np.argsort(dist, axis=1, kind="stable")[:, :k]


def _topk_mask(dist: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask of the k smallest entries per row, ties to the smaller column.

    Same set as ``_stable_topk`` but linear-time per row.
    """
    thr = np.partition(dist, k - 1, axis=1)[:, k - 1, None]
    less = dist < thr
    eq = dist == thr
    need = k - less.sum(axis=1, keepdims=True)
    return less | (eq & (np.cumsum(eq, axis=1) <= need))


@dataclass
class LocalitySweepConfig:
    dims: list[int] = field(default_factory=lambda: list(range(1, 9)))
    sizes: list[int] = field(default_factory=lambda: [512, 1024, 2048])
    neighbors: int = 64
    trials: int = 10
    seed: int = 0
    bits: int | None = None

    def __post_init__(self):
        if not self.dims or not self.sizes or self.neighbors < 1 or self.trials < 1:
            raise ParameterError("dims, sizes, neighbors and trials must all be non-empty / >= 1")
        if min(self.sizes) < 2:
            raise ParameterError("each sample size needs at least two points")


@dataclass(frozen=True)
class LocalityRow:
    d_k: int
    n: int
    trial: int
    mean_overlap: float


def locality_trial(d_k: int, n: int, neighbors: int, seed: int, bits: int | None = None) -> float:
    """Mean over points of |exact kNN  intersect  code-distance kNN| / k for one Gaussian sample."""
    rng = make_rng(seed)
    X = rng.normal(size=(n, d_k))
    k = min(neighbors, n - 1)
    codes = morton.encode_batch(X, morton.fit_config(X, bits))
    dist = np.zeros((n, n))
    for j in range(d_k):
        dist += (X[:, j, None] - X[None, :, j]) ** 2
    np.fill_diagonal(dist, np.inf)
    # 63-bit codes can differ by exactly int64 max; uint64 leaves room for the sentinel.
    code_dist = np.abs(codes[:, None] - codes[None, :]).astype(np.uint64)
    np.fill_diagonal(code_dist, np.iinfo(np.uint64).max)
    both = _topk_mask(dist, k) & _topk_mask(code_dist, k)
    return float((both.sum(axis=1) / k).mean())


def locality_sweep(cfg: LocalitySweepConfig) -> list[LocalityRow]:
    rows = []
    for d in cfg.dims:
        for n in cfg.sizes:
            for t in range(cfg.trials):
                ov = locality_trial(d, n, cfg.neighbors, trial_seed(cfg.seed, d, n, t), cfg.bits)
                rows.append(LocalityRow(d, n, t, ov))
    return rows


def locality_csv(rows: list[LocalityRow], seed: int) -> str:
    buf = io.StringIO()
    buf.write(f"# zeta locality sweep, seed={seed}, dist=gaussian\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d_k", "n", "trial", "mean_overlap"])
    for r in rows:
        w.writerow([r.d_k, r.n, r.trial, f"{r.mean_overlap:.6f}"])
    return buf.getvalue()


@dataclass
class KAblationConfig:
    n: int = 1024
    ks: list[int] = field(default_factory=lambda: [16, 24, 32, 40, 48])
    d_k: int = 3
    M: int = 128
    trials: int = 5
    seed: int = 0
    bits: int | None = None

    def __post_init__(self):
        if self.n < 1 or self.M < 1 or self.trials < 1 or not self.ks or min(self.ks) < 1:
            raise ParameterError("invalid k-ablation configuration")


def exact_topk_all(K: np.ndarray, Q: np.ndarray, M: int, k: int | list[int]):
    """Brute-force causal kNN for every query, padded with -1 (vectorized oracle).

    A list of budgets returns one padded array per budget from a single sort.
    """
    ks = [k] if np.isscalar(k) else list(k)
    n = K.shape[0]
    dist = np.zeros((n, n))
    for j in range(K.shape[1]):
        dist += (Q[:, j, None] - K[None, :, j]) ** 2
    limit = (np.arange(n) // M) * M
    banned = np.arange(n)[None, :] >= limit[:, None]
    dist[banned] = np.inf
    top = _stable_topk(dist, min(max(ks), n))
    out = []
    for kk in ks:
        width = min(kk, n)
        out.append(np.where(np.arange(width)[None, :] < np.minimum(limit, kk)[:, None], top[:, :width], -1))
    return out[0] if np.isscalar(k) else out


def padded_recall(approx: np.ndarray, exact: np.ndarray) -> np.ndarray:
    """Per-query recall of padded selections; NaN where the exact set is empty."""
    n = approx.shape[0]
    hit = np.zeros((n, n + 1), dtype=bool)
    np.put_along_axis(hit, np.where(exact >= 0, exact, n), True, axis=1)
    hit[:, n] = False
    found = np.take_along_axis(hit, np.where(approx >= 0, approx, n), axis=1).sum(1)
    size = (exact >= 0).sum(1)
    return np.where(size > 0, found / np.maximum(size, 1), np.nan)


def k_ablation_trials(cfg: KAblationConfig) -> np.ndarray:
    """``(trials, len(ks))`` mean recall over queries with a non-empty admissible set."""
    out = np.empty((cfg.trials, len(cfg.ks)))
    for t in range(cfg.trials):
        rng = make_rng(trial_seed(cfg.seed, cfg.n, cfg.d_k, cfg.M, t))
        K = rng.normal(size=(cfg.n, cfg.d_k))
        Q = rng.normal(size=(cfg.n, cfg.d_k))
        qcfg = morton.fit_config(np.vstack([K, Q]), cfg.bits)
        index = build_index(morton.encode_batch(K, qcfg), cfg.M)
        q_codes = morton.encode_batch(Q, qcfg)
        exacts = exact_topk_all(K, Q, cfg.M, cfg.ks)
        for c, (k, exact) in enumerate(zip(cfg.ks, exacts)):
            approx = select_topk(index, q_codes, SearchBudget(k, cfg.M))
            out[t, c] = np.nanmean(padded_recall(approx, exact))
    return out


def k_ablation(cfg: KAblationConfig) -> list[tuple[int, float]]:
    per_trial = k_ablation_trials(cfg)
    return [(k, float(r)) for k, r in zip(cfg.ks, per_trial.mean(axis=0))]


def k_ablation_csv(rows: list[tuple[int, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "recall"])
    for k, r in rows:
        w.writerow([k, f"{r:.6f}"])
    return buf.getvalue()
