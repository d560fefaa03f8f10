"""Randomized correctness checks shared by the CLI and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cauchy_attention as ca
from .numerics import finite_diff_grad, make_rng, max_relative_error
from .oracle import dense_causal_attention

GRAD_RTOL = 1e-5
GRAD_ATOL = 1e-8
EQUIV_ATOL = 1e-12


@dataclass(frozen=True)
class GradCase:
    n: int
    d_K: int
    d_V: int
    k: int
    M: int
    theta: float
    duplicate_keys: bool = False


@dataclass(frozen=True)
class GradResult:
    case: GradCase
    rel_error: float
    abs_error: float

    @property
    def ok(self) -> bool:
        return self.rel_error < GRAD_RTOL


def random_case(rng: np.random.Generator, max_n: int = 32) -> GradCase:
    return GradCase(
        n=int(rng.integers(1, max_n + 1)),
        d_K=int(rng.integers(1, 4)),
        d_V=int(rng.integers(1, 17)),
        k=int(rng.integers(1, 9)),
        M=int(rng.choice([1, 2, 4])),
        theta=float(rng.uniform(-2.0, 2.0)),
        duplicate_keys=bool(rng.random() < 0.25),
    )


def gradcheck_case(case: GradCase, seed: int) -> GradResult:
    """Analytic gradients of L = sum(O**2) against central differences, selection held fixed."""
    rng = make_rng(seed)
    n, dk, dv = case.n, case.d_K, case.d_V
    Q = rng.normal(size=(n, dk))
    K = rng.normal(size=(n, dk))
    V = rng.normal(size=(n, dv))
    if case.duplicate_keys and n >= 2:
        K[n // 2] = K[0]
    params = ca.AttentionParams(d_K=dk, d_V=dv, M=case.M, k=case.k, theta=case.theta)
    sel = ca.select(Q, K, params)
    O, cache = ca.forward(Q, K, V, sel, params)
    g = ca.backward(cache, 2.0 * O, params)

    sizes = np.cumsum([n * dk, n * dk, n * dv])

    def loss(x):
        q, k, v, th = np.split(x, sizes)
        p = ca.AttentionParams(d_K=dk, d_V=dv, M=case.M, k=case.k, theta=float(th[0]))
        o, _ = ca.forward(q.reshape(n, dk), k.reshape(n, dk), v.reshape(n, dv), sel, p)
        return float((o * o).sum())

    x0 = np.concatenate([Q.ravel(), K.ravel(), V.ravel(), [case.theta]])
    numeric = finite_diff_grad(loss, x0)
    analytic = np.concatenate([g.dQ.ravel(), g.dK.ravel(), g.dV.ravel(), [g.dTheta]])
    return GradResult(case, max_relative_error(analytic, numeric, GRAD_ATOL),
                      float(np.abs(analytic - numeric).max()))


def gradcheck_random(seed: int, configs: int = 20, max_n: int = 32) -> list[GradResult]:
    rng = make_rng(seed)
    return [gradcheck_case(random_case(rng, max_n), seed=int(rng.integers(2**63))) for _ in range(configs)]


def equiv_case(n: int, seed: int, d_K: int = 3, d_V: int = 8) -> float:
    """Max |attend - dense| with M=1 and k >= N (every earlier token is selected)."""
    rng = make_rng(seed)
    Q = rng.normal(size=(n, d_K))
    K = rng.normal(size=(n, d_K))
    V = rng.normal(size=(n, d_V))
    params = ca.AttentionParams(d_K=d_K, d_V=d_V, M=1, k=max(n, 1), theta=float(rng.uniform(-2, 2)))
    sparse = ca.attend(Q, K, V, params)
    dense = dense_causal_attention(Q, K, V, "cauchy", params)
    return float(np.abs(sparse - dense).max())
