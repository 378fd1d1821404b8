import argparse
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from src.app.core.config import settings
from src.app.core.exceptions import KumaChartError
from src.app.schemas.command import CommandDefinition, CommandOption, CommandRequest
from src.app.services.command_registry import CommandRegistryService, build_registry, command_definitions
from src.app.services.mc_evaluator import MonteCarloEvaluator

logger = logging.getLogger(__name__)

description = """
Shewhart control charts for Kumaraswamy-distributed proportions: limits with known or
estimated parameters, conditional run-length studies and false-alarm-rate adjustment.
"""

_ARG_TYPES = {"number": float, "integer": int, "string": str, "number-list": float, "string-list": str}


def configure_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=(level or settings.LOG_LEVEL).upper(),
        format='%(asctime)s [%(levelname)s] [%(name)s] %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S',
        stream=sys.stderr,
    )


def _add_option(parser: argparse.ArgumentParser, name: str, option: CommandOption, required: bool) -> None:
    flag = f"--{name.replace('_', '-')}"
    help_text = option.description or ""
    if option.default is not None and option.type != "boolean":
        help_text += f" (default: {option.default})"
    if option.type == "boolean":
        parser.add_argument(flag, dest=name, action="store_true", default=None, help=help_text)
        return
    kwargs: Dict[str, Any] = {"dest": name, "type": _ARG_TYPES.get(option.type, str), "default": None,
                              "required": required, "help": help_text}
    if option.enum is not None:
        kwargs["choices"] = option.enum
    if option.is_list:
        kwargs["nargs"] = "+"
    parser.add_argument(flag, **kwargs)


def build_parser(definitions: Sequence[CommandDefinition]) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=int, default=None, help=f"Worker processes (default: {settings.WORKERS}).")
    common.add_argument("--log-level", default=None, help=f"Logging level (default: {settings.LOG_LEVEL}).")

    parser = argparse.ArgumentParser(prog=settings.PROJECT_NAME, description=description)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for definition in definitions:
        sub = subparsers.add_parser(definition.name, parents=[common], help=definition.description,
                                    description=definition.description)
        for name, option in definition.input_schema.options.items():
            _add_option(sub, name, option, name in definition.input_schema.required)
    return parser


def run(argv: Optional[List[str]] = None, registry: Optional[CommandRegistryService] = None) -> int:
    """Parses `argv`, runs the command and returns the process exit code."""
    definitions = registry.get_all_command_definitions() if registry else command_definitions()
    args = build_parser(definitions).parse_args(argv)
    configure_logging(args.log_level)

    if registry is None:
        registry = build_registry(MonteCarloEvaluator(workers=args.workers))
    parameters = {k: v for k, v in vars(args).items()
                  if k not in ("command", "workers", "log_level") and v is not None}

    try:
        record = registry.execute_command(CommandRequest(command=args.command, parameters=parameters))
    except KumaChartError as e:
        logger.warning(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception:
        logger.error(f"Unhandled exception in '{args.command}'", exc_info=True)
        print("error: an unexpected internal error occurred", file=sys.stderr)
        return 1

    command = registry.get_command(args.command)
    if command is not None:
        for line in command.summary_lines(record):
            print(line)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
