"""Small numerical substrate shared by the rest of the package.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. Everything here
is deterministic given a seed: the RNG is numpy's counter-based Philox
generator, so streams do not depend on platform or thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

DEFAULT_FD_STEP = 1e-5


class ShapeError(ValueError):
    """Raised when array shapes are incompatible."""


class ParameterError(ValueError):
    """Raised for invalid scalar parameters (non-positive std, empty input, ...)."""


class EvaluationError(ArithmeticError):
    """Raised when a probed function returns a non-finite value."""


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def make_rng(seed: int) -> np.random.Generator:
    """Philox-backed generator; identical seed gives an identical stream everywhere."""
    return np.random.Generator(np.random.Philox(key=int(seed) & 0xFFFF_FFFF_FFFF_FFFF))


def gaussian_matrix(rng: np.random.Generator, rows: int, cols: int, std: float = 1.0) -> np.ndarray:
    if not std > 0:
        raise ParameterError(f"std must be positive, got {std}")
    if rows < 0 or cols < 0:
        raise ParameterError("rows and cols must be non-negative")
    return rng.normal(0.0, std, size=(rows, cols))


def finite_diff_grad(
    f: Callable[[np.ndarray], float], params, h: float = DEFAULT_FD_STEP
) -> np.ndarray:
    """Central-difference gradient of a scalar function of a flat parameter vector."""
    if not h > 0:
        raise ParameterError(f"step must be positive, got {h}")
    p = np.array(params, dtype=np.float64).reshape(-1)
    grad = np.empty_like(p)
    for i in range(p.size):
        orig = p[i]
        p[i] = orig + h
        fp = float(f(p.copy()))
        p[i] = orig - h
        fm = float(f(p.copy()))
        p[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise EvaluationError(f"non-finite value probing coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * h)
    return grad


def max_relative_error(analytic, numeric, abs_floor: float = 1e-8) -> float:
    """Largest |a - n| / max(|a|, |n|), counting entries with |a - n| <= abs_floor as exact."""
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    if a.shape != n.shape:
        raise ShapeError(f"{a.shape} vs {n.shape}")
    if a.size == 0:
        return 0.0
    diff = np.abs(a - n)
    scale = np.maximum(np.abs(a), np.abs(n))
    denom = np.maximum(scale, abs_floor)
    rel = np.divide(diff, denom, out=np.zeros_like(diff), where=(diff > abs_floor) & (denom > 0))
    return float(rel.max())


@dataclass
class AdamState:
    shape: tuple[int, ...]
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = field(init=False)
    v: np.ndarray = field(init=False)

    def __post_init__(self):
        self.shape = tuple(self.shape)
        self.m = np.zeros(self.shape)
        self.v = np.zeros(self.shape)


def adam_step(state: AdamState, params, grads) -> np.ndarray:
    """One bias-corrected Adam update. Mutates ``state``; returns new parameters."""
    p = np.asarray(params, dtype=np.float64)
    g = np.asarray(grads, dtype=np.float64)
    if p.shape != state.shape or g.shape != state.shape:
        raise ShapeError(f"expected {state.shape}, got params {p.shape} grads {g.shape}")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1**state.step)
    v_hat = state.v / (1.0 - state.beta2**state.step)
    return p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
