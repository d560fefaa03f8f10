"""``zeta`` command line: correctness checks and desk-scale experiments emitting CSV.

Exit codes: 0 success, 1 failed check, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import bench, checks, locality_eval, oracle, toy_train
from .numerics import make_rng


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _default_seed() -> int:
    env = os.environ.get("ZETA_SEED")
    try:
        return int(env) if env is not None else 0
    except ValueError:
        return 0


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_gradcheck(args) -> int:
    results = checks.gradcheck_random(args.seed, configs=args.configs, max_n=args.n)
    worst = max(results, key=lambda r: r.rel_error)
    lines = ["case,n,d_k,d_v,k,m,theta,rel_error,abs_error"]
    for i, r in enumerate(results):
        c = r.case
        lines.append(f"{i},{c.n},{c.d_K},{c.d_V},{c.k},{c.M},{c.theta:.6f},{r.rel_error:.3e},{r.abs_error:.3e}")
    _emit("\n".join(lines) + "\n", args.out)
    print(f"max relative error = {worst.rel_error:.3e} over {len(results)} configurations", file=sys.stderr)
    return 0 if worst.rel_error < checks.GRAD_RTOL else 1


def cmd_equiv(args) -> int:
    sizes = args.sizes or [args.n]
    worst = 0.0
    lines = ["n,seed,max_abs_diff"]
    for n in sizes:
        for s in range(args.seeds):
            d = checks.equiv_case(n, seed=args.seed * 1000 + s, d_K=args.d_k, d_V=args.d_v)
            worst = max(worst, d)
            lines.append(f"{n},{s},{d:.3e}")
    _emit("\n".join(lines) + "\n", args.out)
    print(f"max abs diff vs dense oracle = {worst:.3e}", file=sys.stderr)
    return 0 if worst < checks.EQUIV_ATOL else 1


def cmd_locality(args) -> int:
    cfg = locality_eval.LocalitySweepConfig(dims=args.dims, sizes=args.sizes, neighbors=args.neighbors,
                                            trials=args.trials, seed=args.seed, bits=args.bits)
    _emit(locality_eval.locality_csv(locality_eval.locality_sweep(cfg), args.seed), args.out)
    return 0


def cmd_ablate_k(args) -> int:
    cfg = locality_eval.KAblationConfig(n=args.n, ks=args.ks, d_k=args.d_k, M=args.chunk,
                                        trials=args.trials, seed=args.seed, bits=args.bits)
    _emit(locality_eval.k_ablation_csv(locality_eval.k_ablation(cfg)), args.out)
    return 0


def cmd_metric_demo(args) -> int:
    demo = oracle.house_demo(ddof=args.ddof)
    lines = ["house,euclidean_distance,dot_product"]
    lines += [f"{r.name},{r.euclidean:.3f},{r.dot:.6f}" for r in demo.rows]
    lines.append(f"euclidean_nearest={demo.nearest_euclidean}")
    lines.append(f"max_dot={demo.max_dot}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_train(args) -> int:
    cfg = toy_train.MqarConfig(vocab=args.vocab, n_pairs=args.pairs, seq_len=args.n, d_emb=args.d_model // 2,
                               d_K=args.d_k, d_V=args.d_v, k=args.k, M=args.chunk, batch=args.batch, bits=args.bits)
    model = toy_train.init_model(cfg, args.seed)
    try:
        result = toy_train.train(model, cfg, args.steps, args.lr, seed=args.seed + 1)
    except FloatingPointError as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        return 1
    rng = make_rng(args.seed + 2)
    held_out = [toy_train.generate_mqar(rng, cfg.vocab, cfg.n_pairs, cfg.seq_len) for _ in range(args.eval_instances)]
    acc = toy_train.eval_accuracy(result.model, held_out, cfg)
    _emit(toy_train.loss_csv(result.losses, acc), args.out)
    return 0


def cmd_bench(args) -> int:
    cfg = bench.BenchConfig(sizes=args.sizes, repetitions=args.reps, d_K=args.d_k, d_V=args.d_v, k=args.k,
                            n_chunks=args.chunks, M=args.chunk, seed=args.seed,
                            dense_budget_bytes=args.dense_budget_mb << 20, threads=args.threads)
    _emit(bench.bench_csv(bench.run_bench(cfg, progress=sys.stderr)), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="zeta", description=__doc__, formatter_class=fmt)
    common = argparse.ArgumentParser(add_help=False, formatter_class=fmt)
    common.add_argument("--seed", type=int, default=_default_seed(), help="RNG seed (falls back to $ZETA_SEED)")
    common.add_argument("--out", default=None, help="write CSV here instead of stdout")
    common.add_argument("--threads", type=int, default=1, help="worker cap for the parallel query path")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gradcheck", parents=[common], formatter_class=fmt,
                       help="analytic backward vs central finite differences")
    p.add_argument("--configs", type=int, default=20, help="random configurations")
    p.add_argument("--n", type=int, default=32, help="max sequence length")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("equiv", parents=[common], formatter_class=fmt,
                       help="sparse attention (M=1, k>=N) vs dense causal oracle")
    p.add_argument("--n", type=int, default=64, help="sequence length")
    p.add_argument("--sizes", type=_int_list, default=None, help="comma list of N (overrides --n)")
    p.add_argument("--seeds", type=int, default=10, help="seeds per N")
    p.add_argument("--d-k", type=int, default=3, help="key/query dimension")
    p.add_argument("--d-v", type=int, default=8, help="value dimension")
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("locality", parents=[common], formatter_class=fmt,
                       help="top-k neighbor overlap before/after Z-order projection")
    p.add_argument("--dims", type=_int_list, default=list(range(1, 9)), help="comma list of d_K")
    p.add_argument("--sizes", type=_int_list, default=[512, 1024, 2048], help="comma list of N")
    p.add_argument("--neighbors", type=int, default=64, help="neighbors compared per point")
    p.add_argument("--trials", type=int, default=10, help="trials per (d_K, N)")
    p.add_argument("--bits", type=int, default=None, help="bits per dim (default floor(63/d_K))")
    p.set_defaults(func=cmd_locality)

    p = sub.add_parser("ablate-k", parents=[common], formatter_class=fmt,
                       help="recall of chunked Z-order top-k against exact kNN, per k")
    p.add_argument("--n", type=int, default=1024, help="sequence length")
    p.add_argument("--ks", type=_int_list, default=[16, 24, 32, 40, 48], help="comma list of k")
    p.add_argument("--d-k", type=int, default=3, help="key/query dimension")
    p.add_argument("--chunk", type=int, default=128, help="chunk size M")
    p.add_argument("--trials", type=int, default=5, help="random instances")
    p.add_argument("--bits", type=int, default=None, help="bits per dim (default floor(63/d_K))")
    p.set_defaults(func=cmd_ablate_k)

    p = sub.add_parser("metric-demo", parents=[common], formatter_class=fmt,
                       help="Euclidean distance vs dot product on the house example")
    p.add_argument("--ddof", type=int, default=0, choices=[0, 1], help="z-score std degrees of freedom")
    p.set_defaults(func=cmd_metric_demo)

    p = sub.add_parser("train", parents=[common], formatter_class=fmt,
                       help="train the one-layer model on synthetic MQAR")
    p.add_argument("--steps", type=int, default=500, help="Adam steps")
    p.add_argument("--lr", type=float, default=0.01, help="learning rate")
    p.add_argument("--n", type=int, default=64, help="sequence length")
    p.add_argument("--d-model", type=int, default=64, help="input width (two stacked embeddings)")
    p.add_argument("--d-k", type=int, default=3, help="key/query dimension")
    p.add_argument("--d-v", type=int, default=64, help="value dimension")
    p.add_argument("--k", type=int, default=8, help="neighbors per query")
    p.add_argument("--chunk", type=int, default=8, help="chunk size M")
    p.add_argument("--bits", type=int, default=None, help="bits per dim (default floor(63/d_K))")
    p.add_argument("--vocab", type=int, default=16, help="vocabulary size (keys/values split it)")
    p.add_argument("--pairs", type=int, default=8, help="key-value pairs per sequence")
    p.add_argument("--batch", type=int, default=8, help="sequences per step")
    p.add_argument("--eval-instances", type=int, default=32, help="held-out sequences for accuracy")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", parents=[common], formatter_class=fmt,
                       help="forward wall time, zeta vs dense oracle")
    p.add_argument("--sizes", type=_int_list, default=[1024, 2048, 4096, 8192, 16384, 32768, 65536],
                   help="comma list of N, strictly increasing")
    p.add_argument("--reps", type=int, default=5, help="timed repetitions (>= 3)")
    p.add_argument("--d-k", type=int, default=3, help="key/query dimension")
    p.add_argument("--d-v", type=int, default=16, help="value dimension")
    p.add_argument("--k", type=int, default=32, help="neighbors per query")
    p.add_argument("--chunks", type=int, default=16, help="chunks per sequence (M = ceil(N / chunks))")
    p.add_argument("--chunk", type=int, default=None, help="fixed chunk size M (overrides --chunks)")
    p.add_argument("--dense-budget-mb", type=int, default=4096, help="dense score-matrix memory budget")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(message)s")
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"zeta {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
