"""Command line interface.

Subcommands: init-config, coherence-report, gen-data, train, bench,
sweep-layers. One YAML config drives every stage; --seed (or the
NFCS_SEED environment variable) overrides the file's root seed.

Exit codes: 0 success, 2 configuration or validation error, 3 missing or
unreadable artifact, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from ._binio import FormatError
from .config import (
    ConfigError,
    ExperimentConfig,
    load_config,
    preset,
    render_config_template,
)
from .dictionary import ZeroColumn, coherence_report
from .evaluation import (
    BenchmarkSpec,
    convergence_sweep,
    run_benchmark,
    write_convergence_csv,
    write_history_csv,
)
from .measurement import ZeroSignal, identity_combiner, load_dataset, save_dataset
from .numerics import DimensionMismatch, NonConvergence
from .solvers import SingularRefit
from .unfolded import (
    MissingCheckpoint,
    TrainConfig,
    init_model_params,
    load_checkpoint,
    save_checkpoint,
    train_model,
)

_MODEL_NAMES = {"lista": "lista", "sdl-lista": "sdl"}


def _resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    seed = None
    if os.environ.get("NFCS_SEED"):
        try:
            seed = int(os.environ["NFCS_SEED"])
        except ValueError as exc:
            raise ConfigError(f"NFCS_SEED must be an integer: {exc}") from exc
    if getattr(args, "seed", None) is not None:
        seed = args.seed
    if seed is not None:
        cfg.seed = seed
    return cfg.validate()


def _materialize_budget(ds, threads: int) -> None:
    bytes_needed = ds.size * (ds.combiner.n_rf + ds.label_dim + 1) * 16
    if bytes_needed <= 1_000_000_000:
        ds.materialize(threads=threads)


def cmd_init_config(args) -> int:
    text = render_config_template(args.preset)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
        print(f"wrote {args.preset} preset config to {args.output}")
    return 0


def cmd_coherence_report(args) -> int:
    cfg = _resolve_config(args)
    array = cfg.array()
    grid = cfg.grid()
    w = None
    if not args.identity_combiner:
        w = cfg.combiner().w
    report = coherence_report(array, grid, w,
                              q_range=tuple(cfg.q_range),
                              pair_budget=args.pair_budget)
    kind = "identity" if args.identity_combiner else "sampled"
    print(f"sensing matrix: {kind} combiner, N={array.n_antennas}, "
          f"G={grid.total} ({grid.g_angle} angle x {grid.g_dist} dist)")
    t, g1, g2, val = report.worst_adjacent
    print(f"worst adjacent-pair coherence: {val:.6f} ({t} step, columns {g1},{g2})")
    scope = "exhaustive" if report.global_exhaustive else "sampled"
    print(f"global coherence ({scope}): {report.global_nu:.6f} "
          f"(columns {report.global_pair[0]},{report.global_pair[1]})")
    for q in sorted(report.thresholds):
        thr = report.thresholds[q]
        flag = "EXCEEDED" if report.violations[q] else "ok"
        print(f"  recovery threshold Q={q}: 1/(2Q-1) = {thr:.6f} -> {flag}")
    print(f"elapsed: {report.wall_seconds:.2f}s over {len(report.rows)} adjacent pairs")
    if args.output:
        report.to_csv(args.output)
        print(f"wrote {args.output}")
    return 0


def cmd_gen_data(args) -> int:
    cfg = _resolve_config(args)
    dictionary = cfg.dictionary()
    combiner = cfg.combiner()
    ds = cfg.dataset(args.kind, args.split, dictionary, combiner, size=args.size)
    ds.materialize(threads=args.threads)
    save_dataset(args.output, ds)
    print(f"wrote {ds.size} {args.kind}-kind samples ({args.split} split) "
          f"to {args.output}")
    return 0


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    if args.epochs is not None:
        cfg.epochs = args.epochs
    if args.layers is not None:
        cfg.n_layers = args.layers
    if args.init is not None:
        cfg.init_scheme = args.init
    cfg.validate()
    model_kind = _MODEL_NAMES[args.model]
    dictionary = cfg.dictionary()
    combiner = cfg.combiner()
    history_path = args.history or (str(args.output) + ".history.csv")
    if cfg.epochs == 0:
        init_cfg = TrainConfig(epochs=1, batch_size=cfg.batch_size, lr=cfg.lr,
                               patience=cfg.patience, seed=cfg.seed,
                               init_scheme=cfg.init_scheme, eta0=cfg.eta0,
                               kappa0=cfg.kappa0)
        params = init_model_params(model_kind, cfg.n_layers, dictionary,
                                   combiner, init_cfg, g_sparse=cfg.g_sparse)
        save_checkpoint(args.output, params)
        write_history_csv(history_path, [], timing=not args.no_timing)
        print(f"initialized {args.model} (0 training epochs requested)")
        print(f"wrote checkpoint {args.output} and history {history_path}")
        return 0
    if args.data:
        train_ds = load_dataset(args.data)
        if train_ds.kind != model_kind:
            raise ConfigError(
                f"--data holds {train_ds.kind}-kind samples, --model "
                f"{args.model} trains on {model_kind}-kind")
    else:
        train_ds = cfg.dataset(model_kind, "train", dictionary, combiner)
        _materialize_budget(train_ds, args.threads)
    eval_ds = cfg.dataset("sdl", "test", dictionary, combiner)
    eval_ds.materialize(threads=args.threads)
    result = train_model(model_kind, cfg.n_layers, train_ds, eval_ds, dictionary,
                         combiner, cfg.train_config(), g_sparse=cfg.g_sparse)
    save_checkpoint(args.output, result.params, result.adam_state)
    write_history_csv(history_path, result.history, timing=not args.no_timing)
    print(f"trained {args.model} for {len(result.history)} epochs; "
          f"best epoch {result.best_epoch} at {result.best_nmse_db:.3f} dB NMSE")
    print(f"wrote checkpoint {args.output} and history {history_path}")
    return 0


def cmd_bench(args) -> int:
    cfg = _resolve_config(args)
    methods = tuple(args.methods.split(",")) if args.methods else tuple(cfg.bench_methods)
    dictionary = cfg.dictionary()
    combiner = cfg.combiner()
    checkpoints = {}
    if args.ckpt_dir:
        for name in methods:
            if name in ("lista", "sdl-lista"):
                params, _ = load_checkpoint(os.path.join(args.ckpt_dir,
                                                         f"{name}.ckpt"))
                checkpoints[name] = params
    for item in args.ckpt or []:
        if "=" not in item:
            raise ConfigError(f"--ckpt wants METHOD=PATH, got {item!r}")
        name, path = item.split("=", 1)
        params, _ = load_checkpoint(path)
        checkpoints[name] = params
    spec = BenchmarkSpec(methods=methods,
                         snr_points_db=tuple(cfg.bench_snr_points_db),
                         n_samples=cfg.bench_samples, seed=cfg.seed,
                         omp_iters=cfg.omp_iters, iters=cfg.classic_iters)
    table = run_benchmark(cfg.array(), cfg.prior(), dictionary, combiner, spec,
                          checkpoints)
    table.to_csv(args.output, timing=not args.no_timing)
    print(f"{'method':<10} {'snr_db':>7} {'nmse_db':>9} {'ms/sample':>10}")
    for method, snr, val, ms, _ in table.rows:
        print(f"{method:<10} {snr:>7.1f} {val:>9.3f} {ms:>10.2f}")
    print(f"wrote {args.output}")
    return 0


def cmd_sweep_layers(args) -> int:
    cfg = _resolve_config(args)
    layer_list = [int(x) for x in args.layers.split(",")]
    if any(l < 1 for l in layer_list):
        raise ConfigError("--layers entries must be >= 1")
    dictionary = cfg.dictionary()
    combiner = cfg.combiner()
    eval_ds = cfg.dataset("sdl", "test", dictionary, combiner)
    eval_ds.materialize(threads=args.threads)
    train_ds = cfg.dataset("sdl", "train", dictionary, combiner)
    _materialize_budget(train_ds, args.threads)
    def progress(n_layers, seed, result):
        print(f"layers={n_layers} seed={seed}: best "
              f"{result.best_nmse_db:.3f} dB at epoch {result.best_epoch}")

    blocks = convergence_sweep(layer_list, args.seeds, train_ds, eval_ds,
                               dictionary, combiner, cfg.train_config(),
                               cfg.g_sparse, progress=progress)
    write_convergence_csv(args.output, blocks)
    print(f"wrote {args.output}")
    return 0


def _add_common(sub, config_required: bool = True):
    sub.add_argument("-c", "--config", required=config_required,
                     help="YAML experiment config")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the config seed (also: NFCS_SEED env var)")
    sub.add_argument("--threads", type=int, default=1,
                     help="worker threads for sample generation (results identical)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nfcs",
        description="Near-field channel estimation: simulate, train, benchmark.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("init-config", help="write an annotated config file")
    p.add_argument("--preset", choices=("paper", "desk"), default="desk")
    p.add_argument("-o", "--output", default="-", help="path or - for stdout")
    p.set_defaults(func=cmd_init_config)

    p = subs.add_parser("coherence-report", help="audit dictionary coherence")
    _add_common(p)
    p.add_argument("--identity-combiner", action="store_true",
                   help="audit the raw dictionary (W = I)")
    p.add_argument("--pair-budget", type=int, default=None,
                   help="sample this many pairs instead of the exhaustive scan")
    p.add_argument("-o", "--output", default=None, help="also write the CSV here")
    p.set_defaults(func=cmd_coherence_report)

    p = subs.add_parser("gen-data", help="materialize a dataset to disk")
    _add_common(p)
    p.add_argument("--kind", choices=("lista", "sdl"), required=True)
    p.add_argument("--split", choices=("train", "test"), required=True)
    p.add_argument("--size", type=int, default=None, help="override sample count")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = subs.add_parser("train", help="train an unfolded model")
    _add_common(p)
    p.add_argument("--model", choices=("lista", "sdl-lista"), required=True)
    p.add_argument("--data", default=None,
                   help="train from a gen-data cache instead of streaming")
    p.add_argument("--epochs", type=int, default=None,
                   help="override epoch budget (0 = write the initial checkpoint)")
    p.add_argument("--layers", type=int, default=None, help="override layer count")
    p.add_argument("--init", choices=("scaled", "literal", "structured"),
                   default=None, help="override the weight init scheme")
    p.add_argument("--history", default=None, help="history CSV path")
    p.add_argument("--no-timing", action="store_true",
                   help="zero timing columns for byte-stable output")
    p.add_argument("-o", "--output", required=True, help="checkpoint path")
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("bench", help="run the method x SNR benchmark")
    _add_common(p)
    p.add_argument("--methods", default=None, help="comma list overriding config")
    p.add_argument("--ckpt", action="append", default=None, metavar="METHOD=PATH",
                   help="checkpoint for a learned method (repeatable)")
    p.add_argument("--ckpt-dir", default=None,
                   help="directory holding METHOD.ckpt files for learned methods")
    p.add_argument("--no-timing", action="store_true",
                   help="zero timing columns for byte-stable output")
    p.add_argument("-o", "--output", required=True, help="result CSV path")
    p.set_defaults(func=cmd_bench)

    p = subs.add_parser("sweep-layers", help="train across layer counts")
    _add_common(p)
    p.add_argument("--layers", default="2,4,6,8", help="comma list of depths")
    p.add_argument("--seeds", type=int, default=3, help="seeds per depth")
    p.add_argument("--no-timing", action="store_true",
                   help="zero timing columns for byte-stable output")
    p.add_argument("-o", "--output", required=True, help="convergence CSV path")
    p.set_defaults(func=cmd_sweep_layers)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (MissingCheckpoint, FileNotFoundError, FormatError) as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return 3
    except (NonConvergence, SingularRefit, ZeroSignal, ZeroColumn,
            FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except (ValueError, DimensionMismatch) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
