"""Command-line front end: train/evaluate/analyze with deterministic CSVs.

Subcommands: train, bler, capacity, snr-study, params, snr-moments. Every
output CSV is byte-identical across runs with the same flags and seed, and
each gets a companion gnuplot script next to it. Exit codes: 0 success,
2 usage error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .channel import RngStream
from .codec import GdrCodec
from .errors import DivergenceError, ModelFileError, ShapeError
from .fileio import write_text_atomic
from .model import (TrainingConfig, build_model, count_params, load_model,
                    save_model, train, transmit_power)


class UsageError(ValueError):
    """Invalid flag combination; maps to exit code 2."""


def _require_min(name: str, value, minimum):
    if value < minimum:
        raise UsageError(f"--{name} must be >= {minimum}, got {value}")


def _check_codec_args(M: int, m: int, n: int) -> GdrCodec:
    try:
        return GdrCodec(M=M, m=m, n=n)
    except (ValueError, OverflowError) as exc:
        raise UsageError(str(exc)) from None


def _grid(args) -> list[float]:
    lo, hi, step = args.ebn0_min, args.ebn0_max, args.ebn0_step
    if step <= 0:
        raise UsageError(f"--ebn0-step must be positive, got {step}")
    if lo > hi:
        raise UsageError(
            f"empty Eb/N0 grid: --ebn0-min {lo} exceeds --ebn0-max {hi}")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(count)]


def _train_config(args) -> TrainingConfig:
    _require_min("epochs", args.epochs, 1)
    _require_min("batch-size", args.batch_size, 1)
    _require_min("train-samples", args.train_samples, 2)
    if args.learning_rate <= 0:
        raise UsageError(
            f"--learning-rate must be positive, got {args.learning_rate}")
    tail = args.train_samples % args.batch_size
    if args.batch_size == 1 or tail == 1:
        raise UsageError(
            "batch normalization needs every batch to hold at least 2 "
            f"samples; {args.train_samples} samples with batch size "
            f"{args.batch_size} leaves a final batch of {tail or args.batch_size}")
    return TrainingConfig(epochs=args.epochs, batch_size=args.batch_size,
                          train_samples=args.train_samples,
                          trained_ebn0_db=args.trained_ebn0_db,
                          learning_rate=args.learning_rate, seed=args.seed)


def _write_csv(path: Path, header: str, rows: list[str]) -> None:
    write_text_atomic(path, "\n".join([header] + rows) + "\n")


def _write_plot(csv_path: Path, xlabel: str, ylabel: str, using: str,
                logy: bool = False) -> None:
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    if logy:
        lines.append("set logscale y")
    lines.append(f"plot '{csv_path.name}' using {using} with linespoints")
    write_text_atomic(csv_path.with_suffix(".gp"), "\n".join(lines) + "\n")


def _load_model_checked(args):
    path = Path(args.model)
    if not path.exists():
        raise UsageError(f"model file {path} does not exist")
    return load_model(path)


# ---------------------------------------------------------------------------
# subcommands


def cmd_train(args) -> int:
    codec = _check_codec_args(args.vector_size, args.order, args.channel_uses)
    config = _train_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = Path(args.model) if args.model else out_dir / "model.txt"

    model = build_model(codec.M, codec.n, config.seed)
    _, history = train(model, codec, config)
    save_model(model, model_path)

    loss_csv = out_dir / "loss.csv"
    _write_csv(loss_csv, "epoch,loss",
               [f"{i},{loss!r}" for i, loss in enumerate(history, start=1)])
    _write_plot(loss_csv, "epoch", "loss", "1:2")

    power = transmit_power(model, codec)
    print(f"model written to {model_path}")
    print(f"loss history written to {loss_csv} ({len(history)} epochs, "
          f"final loss {history[-1]:.6g})")
    print("per-dimension transmit power: "
          + " ".join(f"{p:.4f}" for p in power)
          + f" (soft limit 1.1, max {power.max():.4f})")
    return 0


def cmd_bler(args) -> int:
    grid = _grid(args)
    _require_min("blocks", args.blocks, 1000)
    if args.sigma2_override is not None and args.sigma2_override < 0:
        raise UsageError(
            f"--sigma2-override must be >= 0, got {args.sigma2_override}")
    _require_min("jobs", args.jobs, 1)
    model = _load_model_checked(args)
    M, n = model.meta.M, model.meta.n
    if args.vector_size is not None and args.vector_size != M:
        raise ShapeError(f"--vector-size {args.vector_size} does not match "
                         f"model file (M={M}, n={n})")
    if args.channel_uses is not None and args.channel_uses != n:
        raise ShapeError(f"--channel-uses {args.channel_uses} does not match "
                         f"model file (M={M}, n={n})")
    m = args.order if args.order is not None else model.meta.m
    codec = _check_codec_args(M, m, n)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records = analysis.bler_sweep(model, codec, grid, args.blocks, args.seed,
                                  sigma2_override=args.sigma2_override,
                                  jobs=args.jobs,
                                  strict_power=args.strict_power)
    bler_csv = out_dir / "bler.csv"
    _write_csv(bler_csv, "ebn0_db,blocks,errors,bler",
               [f"{r.ebn0_db!r},{r.blocks},{r.errors},{r.bler:.6g}"
                for r in records])
    _write_plot(bler_csv, "Eb/N0 (dB)", "BLER", "1:4", logy=True)
    print(f"BLER sweep written to {bler_csv} ({len(records)} points)")
    return 0


def cmd_capacity(args) -> int:
    codec = _check_codec_args(args.vector_size, args.order, args.channel_uses)
    grid = _grid(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = analysis.capacity_table(codec, grid)
    cap_csv = out_dir / "capacity.csv"
    _write_csv(cap_csv, "ebn0_db,capacity_bits",
               [f"{db!r},{c!r}" for db, c in table])
    _write_plot(cap_csv, "Eb/N0 (dB)", "capacity (bits/s/Hz)", "1:2")
    print(f"capacity table written to {cap_csv} ({len(table)} points)")
    return 0


def cmd_snr_study(args) -> int:
    codec = _check_codec_args(args.vector_size, args.order, args.channel_uses)
    config = _train_config(args)
    _require_min("jobs", args.jobs, 1)
    if not args.trained_ebn0:
        raise UsageError("at least one --trained-ebn0 value is required")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    results = analysis.trained_snr_study(codec.M, codec.m, codec.n,
                                         args.trained_ebn0, config,
                                         jobs=args.jobs)
    for db, history in results:
        csv_path = out_dir / f"loss_{db:g}dB.csv"
        _write_csv(csv_path, "epoch,loss",
                   [f"{i},{loss!r}" for i, loss in enumerate(history, 1)])
        _write_plot(csv_path, "epoch", "loss", "1:2")
    summary_csv = out_dir / "summary.csv"
    _write_csv(summary_csv, "trained_ebn0_db,final_loss",
               [f"{db!r},{history[-1]!r}" for db, history in results])
    _write_plot(summary_csv, "trained Eb/N0 (dB)", "final loss", "1:2")
    print(f"study written to {out_dir} ({len(results)} trained-SNR points)")
    return 0


def cmd_params(args) -> int:
    for M in args.vector_size:
        if M < 2:
            raise UsageError(f"--vector-size must be >= 2, got {M}")
    _require_min("channel-uses", args.channel_uses, 1)
    print("vector_size,dense,norm,relu,softmax,total")
    for M in args.vector_size:
        counts = count_params(build_model(M, args.channel_uses, seed=0))
        print(f"{M},{counts.dense},{counts.norm},{counts.relu},"
              f"{counts.softmax},{counts.total}")
    return 0


def _parse_x(args, n: int) -> np.ndarray:
    try:
        values = [float(tok) for tok in args.x.split(",")]
    except ValueError:
        raise UsageError(f"malformed --x value {args.x!r}") from None
    if len(values) == 1:
        return np.full(n, values[0])
    if len(values) != n:
        raise UsageError(
            f"--x has {len(values)} entries but the map expects n={n}")
    return np.array(values)


def cmd_snr_moments(args) -> int:
    if args.sigma2 < 0:
        raise UsageError(f"--sigma2 must be >= 0, got {args.sigma2}")
    _require_min("samples", args.samples, 10_000)
    if args.identity_map:
        n = args.channel_uses
        _require_min("channel-uses", n, 1)
        A = np.eye(n)
    else:
        if not args.model:
            raise UsageError("either --model or --identity-map is required")
        model = _load_model_checked(args)
        A = analysis.receiver_map(model)
        n = model.meta.n
    x = _parse_x(args, n)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = RngStream(args.seed, 0)
    report = analysis.snr_moments_mc(A, x, args.sigma2, args.samples, rng)
    rows = [",".join([str(i)]
                     + [repr(float(col[i])) for col in
                        (report.e_u, report.d_u, report.e_exp, report.d_exp,
                         report.emp_e_exp, report.emp_d_exp)]
                     + [str(report.n_samples)])
            for i in range(A.shape[0])]
    moments_csv = out_dir / "moments.csv"
    _write_csv(moments_csv,
               "i,e_u,d_u,e_exp,d_exp,emp_e_exp,emp_d_exp,n_samples", rows)
    _write_plot(moments_csv, "element", "E[exp(u_i)]", "1:4")
    overflowed = int(report.overflow.sum())
    if overflowed:
        print(f"warning: {overflowed} overflowing samples excluded",
              file=sys.stderr)
    print(f"moments written to {moments_csv} ({A.shape[0]} elements)")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_codec_flags(sub, m_default=1, required_dims=True):
    sub.add_argument("-M", "--vector-size", type=int,
                     default=8 if required_dims else None,
                     help="codeword vector size M")
    sub.add_argument("-m", "--order", type=int,
                     default=m_default,
                     help="number of non-zero codeword entries m")
    sub.add_argument("-n", "--channel-uses", type=int,
                     default=7 if required_dims else None,
                     help="real channel uses per message n")


def _add_grid_flags(sub):
    sub.add_argument("--ebn0-min", type=float, default=-4.0,
                     help="first Eb/N0 grid point in dB")
    sub.add_argument("--ebn0-max", type=float, default=8.0,
                     help="last Eb/N0 grid point in dB")
    sub.add_argument("--ebn0-step", type=float, default=1.0,
                     help="Eb/N0 grid step in dB")


def _add_train_flags(sub):
    sub.add_argument("--epochs", type=int, default=150,
                     help="training epochs")
    sub.add_argument("--batch-size", type=int, default=45,
                     help="samples per optimizer step")
    sub.add_argument("--train-samples", type=int, default=20_000,
                     help="training messages drawn from the seed")
    sub.add_argument("--learning-rate", type=float, default=1e-3,
                     help="Adam learning rate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gdrcomm",
        description="Deterministic autoencoder link simulator with m-hot "
                    "message encoding over an AWGN channel.")
    subs = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    sub = subs.add_parser("train", formatter_class=fmt,
                          help="train a model, write model file and loss CSV")
    _add_codec_flags(sub)
    _add_train_flags(sub)
    sub.add_argument("--trained-ebn0-db", type=float, default=0.0,
                     help="Eb/N0 in dB at which channel noise is drawn")
    sub.add_argument("--seed", type=int, default=1, help="run seed")
    sub.add_argument("--model", default=None,
                     help="model output path (default OUT_DIR/model.txt)")
    sub.add_argument("-o", "--out-dir", default=".", help="output directory")
    sub.set_defaults(func=cmd_train)

    sub = subs.add_parser("bler", formatter_class=fmt,
                          help="Monte Carlo block-error-rate sweep")
    sub.add_argument("--model", required=True, help="trained model file")
    _add_codec_flags(sub, m_default=None, required_dims=False)
    _add_grid_flags(sub)
    sub.add_argument("--blocks", type=int, default=100_000,
                     help="blocks simulated per grid point")
    sub.add_argument("--sigma2-override", type=float, default=None,
                     help="fixed noise variance replacing the derived one")
    sub.add_argument("--strict-power", action="store_true",
                     help="rescale each transmit symbol to exact unit power")
    sub.add_argument("--jobs", type=int, default=1,
                     help="parallel workers over grid points")
    sub.add_argument("--seed", type=int, default=1, help="run seed")
    sub.add_argument("-o", "--out-dir", default=".", help="output directory")
    sub.set_defaults(func=cmd_bler)

    sub = subs.add_parser("capacity", formatter_class=fmt,
                          help="channel capacity table over an Eb/N0 grid")
    _add_codec_flags(sub)
    _add_grid_flags(sub)
    sub.add_argument("-o", "--out-dir", default=".", help="output directory")
    sub.set_defaults(func=cmd_capacity)

    sub = subs.add_parser("snr-study", formatter_class=fmt,
                          help="train at several Eb/N0 points, compare loss")
    _add_codec_flags(sub)
    _add_train_flags(sub)
    sub.add_argument("--trained-ebn0", type=float, action="append",
                     required=True, metavar="DB",
                     help="trained Eb/N0 in dB (repeat for several points)")
    sub.add_argument("--jobs", type=int, default=1,
                     help="parallel workers over trained-SNR points")
    sub.add_argument("--seed", type=int, default=1, help="run seed")
    sub.add_argument("-o", "--out-dir", default=".", help="output directory")
    sub.set_defaults(func=cmd_snr_study)

    sub = subs.add_parser("params", formatter_class=fmt,
                          help="print trainable-parameter counts per block")
    sub.add_argument("-M", "--vector-size", type=int, nargs="+",
                     default=[8, 16, 64], help="vector sizes to report")
    sub.add_argument("-n", "--channel-uses", type=int, default=7,
                     help="real channel uses per message n")
    sub.set_defaults(func=cmd_params)

    sub = subs.add_parser("snr-moments", formatter_class=fmt,
                          help="closed-form vs Monte Carlo receiver moments")
    sub.add_argument("--model", default=None,
                     help="model file; its receiver weights form the map")
    sub.add_argument("--identity-map", action="store_true",
                     help="use the n x n identity as the linear map")
    sub.add_argument("-n", "--channel-uses", type=int, default=7,
                     help="map width n when using --identity-map")
    sub.add_argument("--x", required=True,
                     help="noise-free map input: comma-separated floats, or "
                          "one value broadcast to length n")
    sub.add_argument("--sigma2", type=float, default=1.0,
                     help="per-dimension noise variance")
    sub.add_argument("--samples", type=int, default=1_000_000,
                     help="Monte Carlo sample count")
    sub.add_argument("--seed", type=int, default=1, help="run seed")
    sub.add_argument("-o", "--out-dir", default=".", help="output directory")
    sub.set_defaults(func=cmd_snr_moments)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ModelFileError, ShapeError, DivergenceError, OSError,
            ValueError, RuntimeError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
