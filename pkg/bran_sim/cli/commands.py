import argparse
import sys
from typing import Dict, List, Optional, Sequence

from bran_sim.cli.config_parser import KEYS, parse_config
from bran_sim.config.logging_config import logger
from bran_sim.exceptions.config_errors import ConfigError
from bran_sim.exceptions.model_errors import InvalidParamError, UnstableError
from bran_sim.models.experiment import ExperimentConfig, Mode
from bran_sim.services.experiment_service import ExperimentService, get_experiment_service
from bran_sim.utils.output_writer import render, write_records_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNSTABLE = 3

MODE_HELP = {
    Mode.ANALYTIC: "closed-form latency terms and bounds",
    Mode.STEADY_STATE: "steady state of the truncated Markov chain",
    Mode.SIMULATE: "event-driven simulation of one parameter set",
    Mode.ATTACK: "closed-form and Monte Carlo alternate-history attack probability",
    Mode.SWEEP_RHO: "latency against traffic intensity for each block size",
    Mode.SWEEP_CONFIRMATIONS: "latency against the number of confirmations",
    Mode.SWEEP_ATTACK: "attack probability against the attacker's relative mining rate",
}


def _flag(key: str) -> str:
    return "--" + key.replace(".", "-").replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    # shared by every subcommand: one override flag per config key
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML config document")
    for key in KEYS:
        if key != "mode":
            common.add_argument(_flag(key), dest=key, metavar="VALUE", help=f"overrides '{key}'")

    parser = argparse.ArgumentParser(prog="bran-sim", description="Latency and security models of blockchain radio access networks")
    subparsers = parser.add_subparsers(dest="mode", required=True, metavar="MODE")
    for mode, description in MODE_HELP.items():
        subparsers.add_parser(mode.value, parents=[common], help=description, description=description)
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as f:
                text = f.read()
        except OSError as exc:
            raise ConfigError("config", f"cannot read config '{args.config}': {exc.strerror}") from exc

    overrides: Dict[str, Optional[str]] = {key: getattr(args, key, None) for key in KEYS}
    return parse_config(text, overrides)


def write_outputs(config: ExperimentConfig, service: ExperimentService, content: str) -> None:
    if config.output:
        with open(config.output, "w", encoding="utf-8", newline="") as f:
            f.write(content)
        logger.info("wrote %s output to %s", config.format.value, config.output)
    else:
        sys.stdout.write(content)

    if config.records_output and service.last_trace is not None:
        with open(config.records_output, "w", encoding="utf-8", newline="") as f:
            write_records_csv(service.last_trace, f)
        logger.info("wrote %d request records to %s", len(service.last_trace), config.records_output)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one experiment from the command line

    Args:
        argv: arguments without the program name, defaults to sys.argv[1:]

    Returns:
        Process exit code: 0 on success, 2 on a config or parameter error, 3 on an unstable analytic request
    """
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        service = get_experiment_service()
        table = service.run_experiment(config)
        write_outputs(config, service, render(table, config.format))
    except (ConfigError, InvalidParamError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except UnstableError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_UNSTABLE
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> None:
    sys.exit(run(argv))
