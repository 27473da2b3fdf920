"""Main entry point for Inception Video Predictor."""

import argparse
import csv
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from .config import setup_logging
from .config.run_config import RunConfig, resolve_run_config
from .core.network import Network, build
from .exceptions import DivergedTrainingError, ShapeError, ValidationError, VideoPredictorError
from .models.report_models import ComparisonRow, EvalReport, ParamBreakdown
from .models.video_models import FrameSequence
from .services.datasets import DatasetService, random_scene
from .services.evaluation import EvaluationService, dump_frames, write_report_csv
from .services.training import TrainConfig, Trainer, load_checkpoint, save_checkpoint, write_loss_csv
from .utils.validators import SHORT_CELL_NAMES, validate_input_paths, validate_layer_count

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

# Flags that steer the CLI itself rather than the run.
_CONTROL_FLAGS = ("command", "config", "verbose", "quiet", "debug", "handler")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key = value file; flags override its values")
    parser.add_argument("--verbose", action="store_true", help="Enable verbose logging")
    parser.add_argument("--quiet", action="store_true", help="Hide training and evaluation progress lines")
    parser.add_argument("--debug", action="store_true", help="Show error details")


def _add_training_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", nargs="+", type=Path, help="IVSQ training files")
    parser.add_argument("--layers", type=int, help="Stacked layers, 2 to 4 (default: 2)")
    parser.add_argument("--steps", type=int, help="Total optimisation steps (default: 500)")
    parser.add_argument("--seed", type=int, help="Initialisation and sampling seed (default: 0)")
    parser.add_argument("--batch", type=int, help="Sequences per step (default: 1)")
    parser.add_argument("--seq-len", dest="seq_len", type=int, help="Frames per window (default: 10)")
    parser.add_argument("--learning-rate", "--lr", dest="learning_rate", type=float, help="Adam step size")
    parser.add_argument("--loss-mode", dest="loss_mode", choices=["pixel_mse", "layer_weighted_error"])
    parser.add_argument("--precision", choices=["float64", "float32"], help="Working precision")
    parser.add_argument("--log-every", dest="log_every", type=int, help="Steps between loss log lines")


def create_parser() -> argparse.ArgumentParser:
    """Create command line argument parser."""
    parser = argparse.ArgumentParser(
        prog="inception-video-predictor",
        description="Inception Video Predictor - next-frame prediction with ConvLSTM and Inception LSTM cells",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s generate --out clip.ivsq --seed 7 --frames 20 --size 16x16
  %(prog)s train --data clip.ivsq --cell iv1 --layers 2 --steps 200 --out model.ivck
  %(prog)s eval --ckpt model.ivck --data held_out.ivsq --seq-len 10 --report eval.csv
  %(prog)s compare --data clip.ivsq --layers 2 --steps 200 --out results/
        """,
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True

    generate = subparsers.add_parser("generate", help="Render a synthetic bouncing-shape sequence")
    generate.add_argument("--out", type=Path, help="IVSQ file to write")
    generate.add_argument("--seed", type=int, help="Scene seed (default: 0)")
    generate.add_argument("--frames", type=int, help="Frame count (default: 20)")
    generate.add_argument("--size", help="Frame size HxW (default: 16x16)")
    generate.add_argument("--shapes", type=int, help="Number of shapes (default: 1)")
    generate.add_argument("--shape-size", dest="shape_size", type=int, help="Shape side in pixels (default: 4)")
    generate.add_argument("--channels", type=int, choices=[1, 3], help="1 for grayscale, 3 for RGB (default: 3)")
    generate.add_argument("--kinds", help="Comma-separated shape kinds: square, circle")
    _add_common(generate)
    generate.set_defaults(handler=cmd_generate)

    train = subparsers.add_parser("train", help="Train a predictive stack and write a checkpoint")
    _add_training_flags(train)
    train.add_argument("--cell", help="conv, iv1 or iv2 (default: conv)")
    train.add_argument("--out", type=Path, help="IVCK checkpoint to write")
    train.add_argument("--loss-csv", dest="loss_csv", type=Path, help="Loss trace CSV (default: next to --out)")
    train.add_argument("--resume", type=Path, help="Checkpoint to continue from")
    _add_common(train)
    train.set_defaults(handler=cmd_train)

    evaluate = subparsers.add_parser("eval", help="Score a checkpoint against the copy-last baseline")
    evaluate.add_argument("--ckpt", type=Path, help="IVCK checkpoint")
    evaluate.add_argument("--data", nargs="+", type=Path, help="IVSQ test files")
    evaluate.add_argument("--seq-len", dest="seq_len", type=int, help="Frames scored per sequence (default: 10)")
    evaluate.add_argument("--report", type=Path, help="CSV to write")
    evaluate.add_argument("--dump-frames", dest="dump_frames", type=Path, help="Directory for PPM frame pairs")
    _add_common(evaluate)
    evaluate.set_defaults(handler=cmd_eval)

    compare = subparsers.add_parser("compare", help="Train conv, iv1 and iv2 with one budget and compare them")
    _add_training_flags(compare)
    compare.add_argument("--test", nargs="+", type=Path, help="Held-out IVSQ files (default: the training data)")
    compare.add_argument("--out", type=Path, help="Directory for compare.csv and compare_params.csv")
    _add_common(compare)
    compare.set_defaults(handler=cmd_compare)

    params = subparsers.add_parser("params", help="Print learnable parameter counts for a layer plan")
    params.add_argument("--cell", help="conv, iv1 or iv2 (default: conv)")
    params.add_argument("--layers", type=int, help="Stacked layers, 2 to 4 (default: 2)")
    params.add_argument("--channels", type=int, choices=[1, 3], help="Frame channels (default: 3)")
    _add_common(params)
    params.set_defaults(handler=cmd_params)

    return parser


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    flags = {k: v for k, v in vars(args).items() if k not in _CONTROL_FLAGS}
    return resolve_run_config(flags, args.config)


def _require(value: Optional[Path], flag: str) -> Path:
    if value is None:
        raise ValidationError(f"{flag} is required", field=flag.lstrip("-").replace("-", "_"))
    return value


def _train_config(config: RunConfig) -> TrainConfig:
    return TrainConfig.from_settings(
        learning_rate=config.learning_rate,
        steps=config.steps,
        batch=config.batch,
        sequence_length=config.seq_len,
        seed=config.seed,
        loss_mode=config.loss_mode,
        precision=config.precision,
        log_every=config.log_every,
    )


def _load_data(paths: Sequence[Path], field: str = "data") -> List[FrameSequence]:
    with DatasetService() as datasets:
        return datasets.load_many(validate_input_paths(paths, field=field))


def display_breakdowns(breakdowns: Sequence[ParamBreakdown], console: Console, total: Optional[int] = None) -> None:
    """Per-layer parameter table."""
    table = Table(title="Cell parameters")
    table.add_column("Layer", style="cyan")
    table.add_column("Cell", style="magenta")
    table.add_column("Kernel elems / gate", style="yellow")
    table.add_column("Kernel scalars", style="green")
    table.add_column("Biases", style="green")
    table.add_column("Total", style="blue")
    for index, breakdown in enumerate(breakdowns):
        table.add_row(
            str(index),
            SHORT_CELL_NAMES[breakdown.cell_type],
            str(breakdown.per_gate_kernel_elems),
            str(breakdown.kernel_scalars),
            str(breakdown.biases),
            str(breakdown.total),
        )
    console.print(table)
    console.print(f"per-gate kernel coefficient: {breakdowns[0].per_gate_kernel_elems}", highlight=False)
    reference = breakdowns[0].reference_total
    if reference is not None:
        console.print(f"reference two-cell total for {breakdowns[0].cell_type}: {reference}", highlight=False)
    if total is not None:
        console.print(f"network parameters: {total}", highlight=False)


def display_report(report: EvalReport, console: Console) -> None:
    table = Table(title=f"{report.model} on {report.source_id}")
    table.add_column("History", style="cyan")
    for metric in ("mae", "mse", "ssim"):
        table.add_column(metric.upper(), style="green")
    curves = {metric: report.curve(metric) for metric in ("mae", "mse", "ssim")}
    for index, history in enumerate(report.history_lengths):
        table.add_row(str(history), *(f"{curves[m][index]:.5f}" for m in ("mae", "mse", "ssim")))
    console.print(table)


def display_comparison(rows: Sequence[ComparisonRow], console: Console) -> None:
    table = Table(title="Cell comparison")
    for column in ("Model", "Layers", "MAE", "MSE", "SSIM", "Kernel elems / gate", "Params", "Status"):
        table.add_column(column)
    for row in rows:
        metrics = ["-" if v is None else f"{v:.5f}" for v in (row.mae, row.mse, row.ssim)]
        table.add_row(
            row.model,
            str(row.layers),
            *metrics,
            "-" if row.kernel_coefficient is None else str(row.kernel_coefficient),
            "-" if row.params is None else str(row.params),
            "ok" if row.succeeded else f"failed ({row.error_code or 'error'})",
        )
    console.print(table)


def cmd_generate(config: RunConfig, console: Console) -> int:
    out = _require(config.out, "--out")
    height, width = config.frame_size
    spec = random_scene(
        config.seed, height, width,
        frame_count=config.frames,
        shapes=config.shapes,
        channels=config.channels,
        size=config.shape_size,
        kinds=config.kinds,
    )
    with DatasetService() as datasets:
        seq, checksum = datasets.generate_file(spec, out)
    console.print(f"frames: {len(seq)}", highlight=False)
    console.print(f"sha256: {checksum}", highlight=False, soft_wrap=True)
    return EXIT_OK


def cmd_train(config: RunConfig, console: Console) -> int:
    out = _require(config.out, "--out")
    data = _load_data(config.data)
    cfg = _train_config(config)

    if config.resume is not None:
        net, opt_state = load_checkpoint(config.resume)
    else:
        validate_layer_count(config.layers)
        net = build(config.layers, seed=config.seed, cell_type=config.cell,
                    frame_channels=data[0].frame_shape[1], dtype=cfg.precision)
        opt_state = None

    with Trainer(net, cfg, opt_state) as trainer:
        result = trainer.run(data)
        save_checkpoint(net, trainer.optimizer_state(), out)
    loss_csv = config.loss_csv or out.with_suffix(".loss.csv")
    write_loss_csv(loss_csv, result.loss_trace, result.start_step)

    final = "n/a" if result.final_loss is None else f"{result.final_loss:.6g}"
    console.print(Panel(
        f"steps: {result.start_step} -> {result.final_step}\nfinal loss: {final}\n"
        f"checkpoint: {out}\nloss csv: {loss_csv}",
        title="Training complete",
        style="bold blue",
    ), highlight=False)
    display_breakdowns(net.param_breakdowns(), console, net.parameter_count())
    return EXIT_OK


def _check_compatible(net: Network, data: Sequence[FrameSequence]) -> None:
    for seq in data:
        channels = seq.frame_shape[1]
        if channels != net.frame_channels:
            raise ShapeError(
                f"sequence {seq.source_id!r} has {channels} channels, checkpoint expects {net.frame_channels}",
                expected=net.frame_channels,
                actual=channels,
            )


def cmd_eval(config: RunConfig, console: Console) -> int:
    ckpt = _require(config.ckpt, "--ckpt")
    report_path = _require(config.report, "--report")
    net, _ = load_checkpoint(ckpt)
    data = _load_data(config.data)
    _check_compatible(net, data)

    with EvaluationService() as evaluation:
        model_name = SHORT_CELL_NAMES.get(net.cell_type, net.cell_type)
        reports = evaluation.evaluate_with_baseline(net, data, config.seq_len, model_name=model_name)
    write_report_csv(report_path, reports)
    for report in reports:
        display_report(report, console)
    if config.dump_frames is not None:
        written = dump_frames(net, data, config.seq_len, config.dump_frames)
        console.print(f"frame dumps: {len(written)} files in {config.dump_frames}", highlight=False)
    console.print(f"report: {report_path}", highlight=False)
    return EXIT_OK


def _write_rows(path: Path, header: Sequence[str], rows: Sequence[List[Any]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_compare(config: RunConfig, console: Console) -> int:
    out_dir = _require(config.out, "--out")
    layers = validate_layer_count(config.layers)
    data = _load_data(config.data)
    test = _load_data(config.test, field="test") if config.test else None
    cfg = _train_config(config)

    with EvaluationService() as evaluation:
        rows = evaluation.compare(data, layers, cfg, test=test)

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_rows(out_dir / "compare.csv", ComparisonRow.CSV_HEADER, [row.to_row() for row in rows])
    _write_rows(out_dir / "compare_params.csv", ComparisonRow.PARAMS_CSV_HEADER, [row.to_params_row() for row in rows])
    display_comparison(rows, console)

    failed = [row for row in rows if not row.succeeded]
    if any(row.error_code == "DIVERGED" for row in failed):
        return EXIT_NUMERIC
    return EXIT_USAGE if failed else EXIT_OK


def cmd_params(config: RunConfig, console: Console) -> int:
    layers = validate_layer_count(config.layers)
    net = build(layers, seed=config.seed, cell_type=config.cell, frame_channels=config.channels)
    display_breakdowns(net.param_breakdowns(), console, net.parameter_count())
    return EXIT_OK


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, (DivergedTrainingError, FloatingPointError)):
        return EXIT_NUMERIC
    if isinstance(error, (VideoPredictorError, OSError)):
        return EXIT_USAGE
    return EXIT_UNEXPECTED


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main application entry point."""
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (None, 0) else EXIT_USAGE

    log_level = "DEBUG" if args.debug or args.verbose else None
    setup_logging(level=log_level, progress=not args.quiet)
    console = Console()

    try:
        config = run_config_from_args(args)
        return args.handler(config, console)

    except VideoPredictorError as e:
        console.print(f"[red]Error: {escape(e.message)}[/red]", highlight=False)
        if args.debug:
            details: Dict[str, Any] = e.to_dict()
            console.print(f"[dim]Details: {escape(str(details))}[/dim]", highlight=False)
        return exit_code_for(e)

    except (OSError, FloatingPointError) as e:
        console.print(f"[red]Error: {escape(str(e))}[/red]", highlight=False)
        return exit_code_for(e)

    except Exception as e:
        console.print(f"[red]Unexpected error: {escape(str(e))}[/red]")
        if args.debug:
            import traceback
            console.print(escape(traceback.format_exc()))
        return EXIT_UNEXPECTED


def cli_main() -> None:
    """CLI entry point."""
    sys.exit(main())


if __name__ == "__main__":
    cli_main()
