"""Z-order (Morton) codes for low-dimensional keys and queries.

Real vectors are mapped onto a ``2**bits`` integer grid per dimension and the
grid coordinates are bit-interleaved into one integer. Codes are kept in
``int64``; the bit budget ``dims * bits <= 63`` keeps them non-negative, so
code differences never wrap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .numerics import ParameterError, ShapeError, as_matrix

MAX_DIMS = 8
CODE_BITS = 63


class ZCode(NamedTuple):
    code: int
    source_index: int


def default_bits(dims: int) -> int:
    return CODE_BITS // dims


@dataclass(frozen=True)
class QuantizationConfig:
    dims: int
    bits_per_dim: int
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        _check_budget(self.dims, self.bits_per_dim)
        if len(self.lo) != self.dims or len(self.hi) != self.dims:
            raise ShapeError("lo/hi must have one entry per dimension")
        for a, b in zip(self.lo, self.hi):
            if not b > a:
                raise ParameterError(f"upper bound {b} must exceed lower bound {a}")

    @property
    def levels(self) -> int:
        return (1 << self.bits_per_dim) - 1

    @classmethod
    def symmetric(cls, bound: Sequence[float], bits_per_dim: int | None = None) -> "QuantizationConfig":
        """Fixed ``[-B_j, B_j]`` box, for projections with a known bound."""
        bound = tuple(float(b) for b in bound)
        bits = default_bits(len(bound)) if bits_per_dim is None else bits_per_dim
        return cls(len(bound), bits, tuple(-b for b in bound), bound)


def _check_budget(dims: int, bits: int) -> None:
    if not 1 <= dims <= MAX_DIMS:
        raise ParameterError(f"dims must be in [1, {MAX_DIMS}], got {dims}")
    if bits < 1:
        raise ParameterError(f"bits_per_dim must be >= 1, got {bits}")
    if dims * bits > CODE_BITS:
        raise ParameterError(f"{dims} dims x {bits} bits exceeds the {CODE_BITS}-bit code budget")


def fit_config(points, bits_per_dim: int | None = None) -> QuantizationConfig:
    """Per-column min/max bounds over ``points``; constant columns are widened by 0.5."""
    pts = as_matrix(points, "points")
    if pts.shape[0] == 0:
        raise ParameterError("cannot fit bounds on an empty point set")
    dims = pts.shape[1]
    bits = default_bits(dims) if bits_per_dim is None else bits_per_dim
    _check_budget(dims, bits)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    flat = ~(hi > lo)
    lo = np.where(flat, lo - 0.5, lo)
    hi = np.where(flat, hi + 0.5, hi)
    return QuantizationConfig(dims, bits, tuple(map(float, lo)), tuple(map(float, hi)))


def quantize_batch(points, cfg: QuantizationConfig) -> np.ndarray:
    pts = as_matrix(points, "points")
    if pts.shape[1] != cfg.dims:
        raise ShapeError(f"points have {pts.shape[1]} columns, config expects {cfg.dims}")
    lo = np.asarray(cfg.lo)
    hi = np.asarray(cfg.hi)
    top = float(cfg.levels)
    scaled = np.floor((pts - lo) / (hi - lo) * top + 0.5)
    scaled = np.clip(scaled, 0.0, top)
    # float(2**b - 1) rounds up to 2**b for b > 53; the integer clamp fixes that.
    grid = np.minimum(scaled.astype(np.uint64), np.uint64(cfg.levels))
    return grid.astype(np.int64)


def quantize(point, cfg: QuantizationConfig) -> np.ndarray:
    p = np.asarray(point, dtype=np.float64).reshape(-1)
    if p.size != cfg.dims:
        raise ShapeError(f"point has {p.size} coordinates, config expects {cfg.dims}")
    return quantize_batch(p[None, :], cfg)[0]


def interleave_batch(grid, bits_per_dim: int) -> np.ndarray:
    """Bit-interleave rows of integer grid coordinates, most significant plane first."""
    g = np.asarray(grid, dtype=np.int64)
    if g.ndim != 2:
        raise ShapeError("grid must be 2-D (rows x dims)")
    d = g.shape[1]
    _check_budget(d, bits_per_dim)
    if g.size and (g.min() < 0 or g.max() >= (1 << bits_per_dim)):
        raise ParameterError(f"grid values must lie in [0, 2**{bits_per_dim})")
    gu = g.astype(np.uint64)
    out = np.zeros(g.shape[0], dtype=np.uint64)
    one = np.uint64(1)
    for plane in range(bits_per_dim):
        for j in range(d):
            bit = (gu[:, j] >> np.uint64(plane)) & one
            out |= bit << np.uint64(plane * d + (d - 1 - j))
    return out.astype(np.int64)


def interleave(grid: Sequence[int], bits_per_dim: int) -> int:
    return int(interleave_batch(np.asarray(grid, dtype=np.int64)[None, :], bits_per_dim)[0])


def deinterleave_batch(codes, dims: int, bits_per_dim: int) -> np.ndarray:
    _check_budget(dims, bits_per_dim)
    c = np.asarray(codes, dtype=np.int64).reshape(-1).astype(np.uint64)
    out = np.zeros((c.size, dims), dtype=np.uint64)
    one = np.uint64(1)
    for plane in range(bits_per_dim):
        for j in range(dims):
            bit = (c >> np.uint64(plane * dims + (dims - 1 - j))) & one
            out[:, j] |= bit << np.uint64(plane)
    return out.astype(np.int64)


def deinterleave(code: int, dims: int, bits_per_dim: int) -> np.ndarray:
    return deinterleave_batch([code], dims, bits_per_dim)[0]


def encode_batch(points, cfg: QuantizationConfig) -> np.ndarray:
    """Morton codes for every row; position ``i`` of the result is the code of row ``i``."""
    return interleave_batch(quantize_batch(points, cfg), cfg.bits_per_dim)


def as_zcodes(codes) -> list[ZCode]:
    return [ZCode(int(c), i) for i, c in enumerate(np.asarray(codes).reshape(-1))]
