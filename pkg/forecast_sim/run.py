import argparse
import glob
import logging
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

# Ensure imports work regardless of cwd
SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
if SCRIPT_DIR not in sys.path:
    sys.path.insert(0, SCRIPT_DIR)

from core.errors import ConfigError, IngestionError, NumericError  # noqa: E402
from core.models.config import ExperimentConfig  # noqa: E402

logger = logging.getLogger("forecast_sim")

EXIT_OK = 0
EXIT_SELFTEST_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
DEFAULT_OUT = os.path.join("runs", "latest")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Initial-value-problem forecaster experiments")
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    def common(p):
        p.add_argument("--config", help="Sectioned key/value config file")
        p.add_argument("--out", help="Output directory (default: $FORECAST_SIM_OUT or runs/latest)")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="K=V",
                       help="Override a config key (repeatable)")
        p.add_argument("--seed", type=int, help="Root random seed")
        p.add_argument("--dataset", help="ETT-layout CSV (default: $FORECAST_SIM_DATASET)")
        p.add_argument("-v", "--verbose", action="store_true", help="Log per-batch losses")

    common(subparsers.add_parser("train", help="Train the full model and report test metrics"))
    p_eval = subparsers.add_parser("evaluate", help="Evaluate saved checkpoints on the test split")
    common(p_eval)
    p_eval.add_argument("--checkpoint", help="Checkpoint file (default: every checkpoint in --out)")
    p_ablate = subparsers.add_parser("ablate", help="Run an ablation suite")
    common(p_ablate)
    p_ablate.add_argument("--suite", default="components",
                          choices=["components", "robustness", "activation"])
    common(subparsers.add_parser("baseline", help="Persistence and linear ridge baselines"))
    p_self = subparsers.add_parser("selftest", help="Run the oracle suites")
    p_self.add_argument("--suite", action="append", choices=["solver", "ridge", "gradients"],
                        help="Suite to run (repeatable, default: all)")
    return parser


def resolve_experiment(args) -> ExperimentConfig:
    experiment = ExperimentConfig.from_file(args.config)
    experiment.apply_overrides(args.overrides)
    if args.seed is not None:
        experiment.set("seed", str(args.seed))
    dataset = args.dataset or experiment.train.dataset or os.getenv("FORECAST_SIM_DATASET", "")
    experiment.train.dataset = dataset
    experiment.validate()
    if not dataset:
        raise ConfigError("no dataset given (--dataset, config key 'dataset' or FORECAST_SIM_DATASET)")
    if not os.path.isfile(dataset):
        raise ConfigError(f"dataset not found: {dataset}")
    return experiment


def attach_log_file(out_dir: str, verbose: bool) -> List[logging.Handler]:
    root = logging.getLogger()
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    file_handler = logging.FileHandler(os.path.join(out_dir, "log.txt"), mode="w", encoding="utf-8")
    console = logging.StreamHandler()
    handlers = [file_handler, console]
    for handler in handlers:
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
    return handlers


def detach(handlers: List[logging.Handler]) -> None:
    root = logging.getLogger()
    for handler in handlers:
        root.removeHandler(handler)
        handler.close()


def run_command(args, experiment: ExperimentConfig, data, out_dir: str) -> int:
    from simulation.engine.checkpoint import load_checkpoint
    from simulation.engine.trainer import evaluate
    from simulation.report import ReportRow, ReportTable

    metrics_path = os.path.join(out_dir, "metrics.csv")
    if args.command == "train":
        from simulation.scenarios.experiment import ExperimentRunner
        table = ExperimentRunner(experiment, data, out_dir).run_variant("full")
    elif args.command == "evaluate":
        paths = [args.checkpoint] if args.checkpoint else sorted(
            glob.glob(os.path.join(out_dir, "checkpoint_*.json")))
        if not paths:
            raise ConfigError(f"no checkpoint given and none found in {out_dir}")
        table = ReportTable()
        for path in paths:
            checkpoint = load_checkpoint(path)
            mse, mae = evaluate(checkpoint, "test", data=data)
            table.add(ReportRow(data.dataset.name, checkpoint.horizon, checkpoint.variant,
                                mse, mae, 0.0, checkpoint.config.seed))
    elif args.command == "ablate":
        from simulation.scenarios.ablation import ablate
        table, deltas = ablate(experiment, args.suite, data, out_dir)
        deltas.to_csv(os.path.join(out_dir, "ablation_deltas.csv"), index=False)
    else:
        from simulation.scenarios.baselines import baseline
        table = baseline(experiment, data)
    table.write_csv(metrics_path)
    logger.info(f"Wrote {len(table)} rows to {metrics_path}")
    return EXIT_OK


def run(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    if args.command == "selftest":
        logging.basicConfig(level=logging.WARNING, format=LOG_FORMAT)
        from simulation.scenarios.selftest import run_selftest
        results = run_selftest(args.suite)
        return EXIT_OK if all(r.passed for r in results) else EXIT_SELFTEST_FAILED

    handlers: List[logging.Handler] = []
    try:
        experiment = resolve_experiment(args)
        from simulation.engine.trainer import PreparedData
        # ingestion errors surface before any output is created
        data = PreparedData.load(experiment.train)
        out_dir = args.out or os.getenv("FORECAST_SIM_OUT") or DEFAULT_OUT
        os.makedirs(out_dir, exist_ok=True)
        handlers = attach_log_file(out_dir, args.verbose)
        with open(os.path.join(out_dir, "config-resolved.snapshot"), "w", encoding="utf-8") as handle:
            handle.write(experiment.to_ini())
        logger.info(f"Running {args.command} on {experiment.train.dataset} into {out_dir}")
        return run_command(args, experiment, data, out_dir)
    except (ConfigError, IngestionError) as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        logger.error(f"Numeric failure: {exc}")
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    finally:
        detach(handlers)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
