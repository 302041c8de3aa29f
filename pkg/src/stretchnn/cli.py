"""Command-line entry point.

Subcommands: ``train`` the reference classifier, ``simulate`` the optical
chain on a test subset, ``oracle-check`` the cross-path consistency
bounds, and ``report`` to re-render an emitted report directory.

Exit codes: 0 success, 1 validation/configuration error, 2 oracle-bound
violation, 3 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import SimulationConfig, load_config, validate_config
from .dataset import Dataset
from .errors import (
    ConfigurationError,
    EncodingError,
    FormatError,
    OracleBoundViolation,
    TrainingError,
    ValidationError,
)
from .harness import (
    emit_report,
    oracle_check,
    require_oracle,
    run_inference_experiment,
    select_test_subset,
)
from .network import TrainConfig, evaluate, load_weights, save_weights, train_sgd

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_ORACLE = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stretchnn",
        description="Time-stretch electro-optical neural network simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train the reference digit classifier")
    p_train.add_argument("--mnist-dir", required=True)
    p_train.add_argument("--config", default=None, help="simulation config (for seed)")
    p_train.add_argument("--out-weights", required=True)
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p_train.add_argument("--learning-rate", type=float, default=TrainConfig.learning_rate)
    p_train.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)

    p_sim = sub.add_parser("simulate", help="run the optical chain on test samples")
    p_sim.add_argument("--weights", required=True)
    p_sim.add_argument("--mnist-dir", required=True)
    p_sim.add_argument("--config", default=None)
    p_sim.add_argument("--mode", choices=["analytic", "full-field"], default=None)
    p_sim.add_argument("--noise", choices=["on", "off"], default=None)
    p_sim.add_argument("--samples", type=int, default=None, help="total subset size")
    p_sim.add_argument("--subset-seed", type=int, default=None)
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--out", required=True, help="report directory")

    p_oracle = sub.add_parser("oracle-check", help="cross-path consistency checks")
    p_oracle.add_argument("--trials", type=int, default=20)
    p_oracle.add_argument("--config", default=None)

    p_report = sub.add_parser("report", help="re-render an emitted report")
    p_report.add_argument("--in", dest="in_dir", required=True)
    p_report.add_argument("--format", choices=["text", "csv", "json"], default="text")
    return parser


def _load_simulation_config(path: str | None) -> SimulationConfig:
    if path is None:
        config = SimulationConfig()
        validate_config(config)
        return config
    return load_config(path)


def _cmd_train(args) -> int:
    dataset = Dataset.from_mnist_dir(args.mnist_dir)
    config = _load_simulation_config(args.config)
    seed = args.seed if args.seed is not None else config.seed
    train_config = TrainConfig(
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=seed,
    )
    params, curve = train_sgd(dataset, train_config)
    for epoch, acc in enumerate(curve, start=1):
        print(f"epoch {epoch:3d}: validation accuracy {acc:.4f}")
    test_acc, _ = evaluate(params, dataset.test_images, dataset.test_labels)
    print(f"test accuracy {test_acc:.4f}")
    save_weights(params, args.out_weights)
    print(f"weights written to {args.out_weights}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    config = _load_simulation_config(args.config)
    if args.mode is not None:
        config = config.replace(mode=args.mode.replace("-", "_"))
    if args.noise is not None:
        config = config.with_noise(args.noise == "on")
    if args.subset_seed is not None:
        config = config.replace(subset_seed=args.subset_seed)
    if args.samples is not None:
        if args.samples % 10:
            raise ValidationError("--samples must be a multiple of 10 (stratified)")
        config = config.replace(subset_per_class=args.samples // 10)
    validate_config(config)
    params = load_weights(args.weights)
    dataset = Dataset.from_mnist_dir(args.mnist_dir)
    indices, images, labels = select_test_subset(dataset, config)
    report = run_inference_experiment(
        config, params, images, labels, indices, workers=args.workers
    )
    paths = emit_report(report, args.out)
    for name in sorted(report.systems):
        print(f"accuracy {name} = {report.accuracy(name):.4f}")
    print(f"report written to {', '.join(str(p) for p in paths)}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    config = _load_simulation_config(args.config)
    report = oracle_check(config, trials=args.trials)
    sys.stdout.write(report.render())
    require_oracle(report)
    return EXIT_OK


def _cmd_report(args) -> int:
    in_dir = Path(args.in_dir)
    summary = in_dir / "summary.txt"
    samples = in_dir / "samples.csv"
    if args.format == "text":
        sys.stdout.write(summary.read_text())
    elif args.format == "csv":
        sys.stdout.write(samples.read_text())
    else:
        accuracies = {}
        for line in summary.read_text().splitlines():
            if line.startswith("accuracy "):
                _, name, _, value = line.split()
                accuracies[name] = float(value)
        sys.stdout.write("{\n")
        for name in sorted(accuracies):
            sys.stdout.write(f'  "{name}": {accuracies[name]:.4f},\n')
        sys.stdout.write("}\n")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "train": _cmd_train,
        "simulate": _cmd_simulate,
        "oracle-check": _cmd_oracle,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (ValidationError, ConfigurationError, EncodingError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OracleBoundViolation as exc:
        print(f"oracle bound violated:\n{exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (OSError, FormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
