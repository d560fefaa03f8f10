"""Chunked, causally-masked top-k retrieval over sorted Morton codes.

Keys are split by original position into chunks of ``M`` tokens and each chunk
is sorted by code. A query at position ``i`` may only look at chunks
``0 .. floor(i / M) - 1``. In each admissible chunk the candidates are the
``k`` codes nearest the binary-search insertion point (a contiguous window of
the sorted chunk); candidates from all chunks are merged by absolute code
difference, ties going to the smaller source position.

Selections are exchanged in two forms: a list of :class:`TopKSelection` (one
per query) for clarity, and a padded ``(N, k)`` int64 array filled with ``-1``
for the vectorized paths.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .morton import ZCode
from .numerics import ParameterError, ShapeError

_SENTINEL = np.iinfo(np.int64).max


@dataclass(frozen=True)
class SearchBudget:
    k: int
    M: int

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")
        if self.M < 1:
            raise ParameterError(f"chunk size M must be >= 1, got {self.M}")


@dataclass(frozen=True)
class TopKSelection:
    indices: tuple[int, ...]
    has_mean_slot: bool = True

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class ChunkedIndex:
    M: int
    n: int
    codes: np.ndarray  # chunk-major: chunk c sorted in codes[c*M : (c+1)*M]
    sources: np.ndarray

    @property
    def n_chunks(self) -> int:
        return -(-self.n // self.M)

    def chunk_bounds(self, c: int) -> tuple[int, int]:
        return c * self.M, min((c + 1) * self.M, self.n)

    def chunk(self, c: int) -> list[ZCode]:
        a, b = self.chunk_bounds(c)
        return [ZCode(int(x), int(s)) for x, s in zip(self.codes[a:b], self.sources[a:b])]


def _codes_array(key_codes) -> np.ndarray:
    if len(key_codes) and isinstance(key_codes[0], ZCode):
        order = sorted(key_codes, key=lambda z: z.source_index)
        if [z.source_index for z in order] != list(range(len(order))):
            raise ParameterError("ZCode source indices must be 0..N-1")
        return np.array([z.code for z in order], dtype=np.int64)
    return np.asarray(key_codes, dtype=np.int64).reshape(-1)


def build_index(key_codes, M: int) -> ChunkedIndex:
    codes = _codes_array(key_codes)
    n = codes.size
    if n == 0:
        raise ParameterError("cannot index an empty key set")
    if M < 1:
        raise ParameterError(f"chunk size M must be >= 1, got {M}")
    src = np.arange(n, dtype=np.int64)
    chunk_id = src // M
    # Sort by (chunk, code, source); chunk ranges stay [c*M, (c+1)*M).
    order = np.lexsort((src, codes, chunk_id))
    return ChunkedIndex(M=M, n=n, codes=codes[order], sources=src[order])


def _window(codes: np.ndarray, sources: np.ndarray, q: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """The min(k, len) codes of one sorted chunk nearest the insertion point of ``q``."""
    pos = int(np.searchsorted(codes, q, side="left"))
    left = np.arange(pos - 1, pos - k - 1, -1)
    right = np.arange(pos, pos + k)
    cand = np.concatenate([left, right])
    cand = cand[(cand >= 0) & (cand < codes.size)]
    diff = np.abs(codes[cand] - q)
    take = np.argsort(diff, kind="stable")[:k]
    return diff[take], sources[cand[take]]


def query_topk(index: ChunkedIndex, query_code: int, query_pos: int, budget: SearchBudget) -> TopKSelection:
    if not 0 <= query_pos < index.n:
        raise ParameterError(f"query position {query_pos} outside [0, {index.n})")
    if budget.M != index.M:
        raise ParameterError(f"budget chunk size {budget.M} != index chunk size {index.M}")
    m = query_pos // index.M
    diffs, srcs = [], []
    for c in range(m):
        a, b = index.chunk_bounds(c)
        d, s = _window(index.codes[a:b], index.sources[a:b], int(query_code), budget.k)
        diffs.append(d)
        srcs.append(s)
    if not diffs:
        return TopKSelection(())
    d = np.concatenate(diffs)
    s = np.concatenate(srcs)
    order = np.lexsort((s, d))[: budget.k]
    return TopKSelection(tuple(int(x) for x in s[order]))


def _select_block(index: ChunkedIndex, query_codes: np.ndarray, positions: np.ndarray, k: int) -> np.ndarray:
    nq = positions.size
    best_bad = np.ones((nq, k), dtype=bool)
    best_diff = np.zeros((nq, k), dtype=np.int64)
    best_src = np.full((nq, k), _SENTINEL, dtype=np.int64)
    M = index.M
    m = positions // M
    for c in range(int(m.max(initial=0))):
        rows = np.nonzero(m > c)[0]
        a, b = index.chunk_bounds(c)
        codes = index.codes[a:b]
        L = b - a
        w = min(k, L)  # a window never reaches further than the chunk length on either side
        offsets = np.concatenate([np.arange(-1, -w - 1, -1), np.arange(0, w)])
        q = query_codes[rows]
        pos = np.searchsorted(codes, q, side="left")
        cand = pos[:, None] + offsets[None, :]
        bad = (cand < 0) | (cand >= L)
        safe = np.clip(cand, 0, L - 1)
        diff = np.abs(codes[safe] - q[:, None])
        # invalid slots last, then nearest code; stable keeps left-before-right.
        take = np.lexsort((diff, bad), axis=-1)[:, :w]
        w_bad = np.take_along_axis(bad, take, axis=1)
        w_diff = np.take_along_axis(diff, take, axis=1)
        w_src = np.where(w_bad, _SENTINEL, index.sources[a:b][np.take_along_axis(safe, take, axis=1)])

        all_bad = np.concatenate([best_bad[rows], w_bad], axis=1)
        all_diff = np.concatenate([best_diff[rows], w_diff], axis=1)
        all_src = np.concatenate([best_src[rows], w_src], axis=1)
        keep = np.lexsort((all_src, all_diff, all_bad), axis=-1)[:, :k]
        best_bad[rows] = np.take_along_axis(all_bad, keep, axis=1)
        best_diff[rows] = np.take_along_axis(all_diff, keep, axis=1)
        best_src[rows] = np.take_along_axis(all_src, keep, axis=1)
    return np.where(best_bad, -1, best_src)


def select_topk(index: ChunkedIndex, query_codes, budget: SearchBudget, threads: int = 1) -> np.ndarray:
    """Vectorized :func:`query_topk` for every position; padded ``(N, k)`` array, -1 = empty.

    Query blocks are independent, so ``threads > 1`` yields the same array.
    """
    q = np.asarray(query_codes, dtype=np.int64).reshape(-1)
    if q.size != index.n:
        raise ShapeError(f"{q.size} query codes for an index over {index.n} keys")
    if budget.M != index.M:
        raise ParameterError(f"budget chunk size {budget.M} != index chunk size {index.M}")
    positions = np.arange(index.n, dtype=np.int64)
    if threads <= 1 or index.n < 2 * threads:
        return _select_block(index, q, positions, budget.k)
    blocks = np.array_split(positions, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda p: _select_block(index, q[p], p, budget.k), blocks))
    return np.concatenate(parts, axis=0)


def to_selections(padded: np.ndarray) -> list[TopKSelection]:
    return [TopKSelection(tuple(int(j) for j in row if j >= 0)) for row in np.asarray(padded)]


def to_padded(selections: Sequence[TopKSelection], k: int | None = None) -> np.ndarray:
    width = max([len(s) for s in selections] + [0 if k is None else k, 1])
    out = np.full((len(selections), width), -1, dtype=np.int64)
    for i, s in enumerate(selections):
        out[i, : len(s)] = s.indices
    return out


def exact_topk_oracle(keys, query, query_pos: int, budget: SearchBudget) -> TopKSelection:
    """Brute-force k nearest admissible keys (j < floor(i/M)*M) in Euclidean distance."""
    K = np.asarray(keys, dtype=np.float64)
    limit = (query_pos // budget.M) * budget.M
    if limit == 0:
        return TopKSelection(())
    d = ((K[:limit] - np.asarray(query, dtype=np.float64)) ** 2).sum(axis=1)
    order = np.lexsort((np.arange(limit), d))[: budget.k]
    return TopKSelection(tuple(int(j) for j in order))


def recall_at_k(approx: TopKSelection, exact: TopKSelection) -> float:
    if len(exact) == 0:
        return 1.0
    return len(set(approx.indices) & set(exact.indices)) / len(exact)
