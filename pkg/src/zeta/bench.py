"""Wall-clock scaling of the ZETA forward pass against the dense O(N^2) oracle."""

from __future__ import annotations

import io
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .cauchy_attention import AttentionParams, attend
from .numerics import ParameterError, make_rng
from .oracle import dense_causal_attention

OOM = "OOM"


@dataclass
class BenchConfig:
    sizes: list[int] = field(default_factory=lambda: [1024, 2048, 4096, 8192, 16384, 32768, 65536])
    repetitions: int = 5
    d_K: int = 3
    d_V: int = 16
    k: int = 32
    n_chunks: int = 16  # chunk size M = ceil(N / n_chunks) unless M is given
    M: int | None = None
    seed: int = 0
    dense_budget_bytes: int = 4 << 30
    dense_block: int = 512
    threads: int = 1
    backends: tuple[str, ...] = ("zeta", "dense")

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])) or not self.sizes:
            raise ParameterError("sizes must be a non-empty strictly increasing list")
        if self.repetitions < 3:
            raise ParameterError("repetitions must be >= 3")
        unknown = set(self.backends) - {"zeta", "dense"}
        if unknown:
            raise ParameterError(f"unknown backends {sorted(unknown)}")

    def chunk_size(self, n: int) -> int:
        return self.M if self.M is not None else max(1, -(-n // self.n_chunks))


@dataclass(frozen=True)
class BenchRow:
    backend: str
    n: int
    median_ms: float | None
    p10_ms: float | None
    p90_ms: float | None

    @property
    def oom(self) -> bool:
        return self.median_ms is None


def dense_nominal_bytes(n: int) -> int:
    """Bytes of the full N x N float64 score matrix an untiled dense forward holds."""
    return 8 * n * n


def _time(fn, reps: int) -> list[float]:
    fn()  # warm-up
    out = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        out.append((time.perf_counter() - t0) * 1e3)
    return out


def _row(backend: str, n: int, samples: list[float]) -> BenchRow:
    p10, med, p90 = np.percentile(samples, [10, 50, 90])
    return BenchRow(backend, n, float(med), float(p10), float(p90))


def run_bench(cfg: BenchConfig, progress=sys.stderr) -> list[BenchRow]:
    rows = []
    for n in cfg.sizes:
        rng = make_rng(cfg.seed + n)
        Q = rng.normal(size=(n, cfg.d_K))
        K = rng.normal(size=(n, cfg.d_K))
        V = rng.normal(size=(n, cfg.d_V))
        params = AttentionParams(d_K=cfg.d_K, d_V=cfg.d_V, M=cfg.chunk_size(n), k=cfg.k)
        if "zeta" in cfg.backends:
            if cfg.threads > 1:
                same = np.array_equal(attend(Q, K, V, params), attend(Q, K, V, params, threads=cfg.threads))
                if not same:
                    raise AssertionError(f"parallel query path diverged from sequential at N={n}")
            samples = _time(lambda: attend(Q, K, V, params, threads=cfg.threads), cfg.repetitions)
            rows.append(_row("zeta", n, samples))
            _report(progress, rows[-1])
        if "dense" in cfg.backends:
            if dense_nominal_bytes(n) > cfg.dense_budget_bytes:
                rows.append(BenchRow("dense", n, None, None, None))
            else:
                try:
                    samples = _time(lambda: dense_causal_attention(Q, K, V, "cauchy", params, block=cfg.dense_block),
                                    cfg.repetitions)
                    rows.append(_row("dense", n, samples))
                except MemoryError:
                    rows.append(BenchRow("dense", n, None, None, None))
            _report(progress, rows[-1])
    return rows


def _report(stream, row: BenchRow) -> None:
    if stream is None:
        return
    t = OOM if row.oom else f"{row.median_ms:.1f} ms"
    print(f"[bench] {row.backend:>5} N={row.n:<6d} {t}", file=stream, flush=True)


def doubling_ratios(rows: list[BenchRow], backend: str, n_min: int = 0, n_max: int | None = None) -> list[tuple[int, float]]:
    """``(N, T(2N)/T(N))`` for consecutive measured sizes of one backend."""
    got = {r.n: r.median_ms for r in rows if r.backend == backend and not r.oom}
    out = []
    for n in sorted(got):
        if n >= n_min and 2 * n in got and (n_max is None or 2 * n <= n_max):
            out.append((n, got[2 * n] / got[n]))
    return out


def bench_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    buf.write("backend,n,median_ms,p10_ms,p90_ms\n")
    for r in rows:
        if r.oom:
            buf.write(f"{r.backend},{r.n},{OOM},{OOM},{OOM}\n")
        else:
            buf.write(f"{r.backend},{r.n},{r.median_ms:.3f},{r.p10_ms:.3f},{r.p90_ms:.3f}\n")
    return buf.getvalue()
