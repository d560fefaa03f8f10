import io

import numpy as np
import pytest

from zeta.bench import BenchConfig, BenchRow, bench_csv, doubling_ratios, run_bench
from zeta.numerics import ParameterError


def small(**kw):
    base = dict(sizes=[64, 128], repetitions=3, d_V=4, k=4, n_chunks=4)
    base.update(kw)
    return BenchConfig(**base)


def test_small_run_schema():
    log = io.StringIO()
    rows = run_bench(small(), progress=log)
    assert [(r.backend, r.n) for r in rows] == [("zeta", 64), ("dense", 64), ("zeta", 128), ("dense", 128)]
    assert all(r.p10_ms <= r.median_ms <= r.p90_ms for r in rows)
    assert all(r.p90_ms <= 3 * r.p10_ms for r in rows)  # repetitions agree within 3x
    assert log.getvalue().count("[bench]") == 4
    lines = bench_csv(rows).splitlines()
    assert lines[0] == "backend,n,median_ms,p10_ms,p90_ms"
    assert len(lines) == 5


def test_oom_marker():
    rows = run_bench(small(dense_budget_bytes=8 * 64 * 64), progress=None)
    dense = {r.n: r for r in rows if r.backend == "dense"}
    assert not dense[64].oom and dense[128].oom
    assert "dense,128,OOM,OOM,OOM" in bench_csv(rows)


def test_config_validation():
    with pytest.raises(ParameterError):
        small(repetitions=2)
    with pytest.raises(ParameterError):
        small(sizes=[128, 64])
    with pytest.raises(ParameterError):
        small(backends=("flash",))


def test_chunk_size():
    assert BenchConfig().chunk_size(1000) == 63
    assert BenchConfig(M=32).chunk_size(1000) == 32


def test_threads_checked_identical():
    rows = run_bench(small(threads=2, backends=("zeta",)), progress=None)
    assert len(rows) == 2


def test_doubling_ratios():
    rows = [BenchRow("zeta", 1, 1.0, 1, 1), BenchRow("zeta", 2, 3.0, 3, 3), BenchRow("zeta", 4, 6.0, 6, 6),
            BenchRow("dense", 2, None, None, None)]
    assert doubling_ratios(rows, "zeta") == [(1, 3.0), (2, 2.0)]
    assert doubling_ratios(rows, "zeta", n_min=2) == [(2, 2.0)]
    assert doubling_ratios(rows, "dense") == []
