import logging
import time
from typing import Dict, List, Optional

from src.app.core.exceptions import DomainError, KumaChartError
from src.app.repositories.report_repository import ReportRepository
from src.app.schemas.command import CommandDefinition, CommandRequest
from src.app.schemas.report import ReportRecord
from src.app.services.commands.base_command import BaseCommand
from src.app.services.commands.chart_commands import ChartCommand, LimitsCommand
from src.app.services.commands.distribution_commands import (
    DensityCommand,
    FitCommand,
    MomentsCommand,
    SimulateCommand,
)
from src.app.services.commands.study_commands import CalibrateCommand, IcStudyCommand, OocStudyCommand
from src.app.services.mc_evaluator import MonteCarloEvaluator

logger = logging.getLogger(__name__)

COMMAND_CLASSES = (SimulateCommand, FitCommand, LimitsCommand, IcStudyCommand, CalibrateCommand,
                   OocStudyCommand, ChartCommand, MomentsCommand, DensityCommand)


class CommandRegistryService:
    """Manages the registration and execution of CLI commands."""

    def __init__(self):
        self._commands: Dict[str, BaseCommand] = {}
        self._definitions: Dict[str, CommandDefinition] = {}
        logger.debug("CommandRegistryService initialized.")

    def register_command(self, command: BaseCommand) -> None:
        definition = command.get_definition()
        if definition.name in self._commands:
            logger.warning(f"Command '{definition.name}' is already registered. Overwriting.")
        self._commands[definition.name] = command
        self._definitions[definition.name] = definition

    def get_command(self, name: str) -> Optional[BaseCommand]:
        return self._commands.get(name)

    def get_all_command_definitions(self) -> List[CommandDefinition]:
        return list(self._definitions.values())

    def execute_command(self, request: CommandRequest) -> ReportRecord:
        """
        Runs a registered command.

        Args:
            request: Command name and its parsed parameters.

        Returns:
            The command's ReportRecord.

        Raises:
            DomainError: if the command is unknown or its parameters are invalid.
            KumaChartError: whatever the command itself raises.
        """
        command = self.get_command(request.command)
        if command is None:
            raise DomainError(f"Command '{request.command}' not found.")

        start_time = time.time()
        logger.info(f"Executing command '{request.command}'")
        logger.debug(f"Parameters: {request.parameters}")
        try:
            record = command.run(request.parameters)
        except KumaChartError as e:
            logger.warning(f"Command '{request.command}' failed: {e}")
            raise
        logger.info(f"Command '{request.command}' finished in {time.time() - start_time:.2f}s")
        return record


def build_registry(evaluator: Optional[MonteCarloEvaluator] = None,
                   repository: Optional[ReportRepository] = None) -> CommandRegistryService:
    """Registry with every command sharing one evaluator, so fits are reused within a run."""
    evaluator = evaluator or MonteCarloEvaluator()
    repository = repository or ReportRepository()
    registry = CommandRegistryService()
    for command_cls in COMMAND_CLASSES:
        registry.register_command(command_cls(evaluator=evaluator, repository=repository))
    return registry


def command_definitions() -> List[CommandDefinition]:
    return [command_cls().get_definition() for command_cls in COMMAND_CLASSES]
