import argparse
from typing import Dict, Optional

from .errors_module import Validation_Error
from .settings_module import Settings

class Command:
    """Common base class for all sub-commands."""
    name: str = ""
    help: str = ""

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        """Register command-specific arguments."""

    def run(self, arguments: argparse.Namespace) -> None:
        """Execute the command."""
        raise NotImplementedError

class Command_Manager:
    """
    Holds the registered sub-commands and dispatches a parsed command line to the
    selected one.
    """
    def __init__(self, settings: Settings) -> None:
        """
        Initializes the Command_Manager with the given settings.

        Args:
            settings (Settings): The settings shared by every command.
        """
        self.settings: Settings = settings
        self.commands: Dict[str, Command] = {}
        self.selected_command: Optional[str] = None

    def _check_selected_command(self) -> None:
        """
        Raises:
            RuntimeError: If no command is selected or the selection is not registered.
        """
        if not self.selected_command:
            raise RuntimeError("No command selected")

        if self.selected_command not in self.commands:
            raise RuntimeError("The selected command is not a valid command")

    def add_command(self, command: Command) -> None:
        """
        Registers a command under its name.

        Args:
            command (Command): An instance of a Command subclass with a non-empty name.

        Raises:
            Validation_Error: If the command is not a Command or its name is empty or taken.
        """
        if not issubclass(type(command), Command):
            raise Validation_Error(f"Invalid type for 'command': expected subclass of 'Command', got {type(command).__name__}")
        if not isinstance(command.name, str) or not command.name:
            raise Validation_Error(f"Invalid value for 'name': expected a non-empty string, got {command.name!r}")
        if command.name in self.commands:
            raise Validation_Error(f"Command already registered: '{command.name}'")

        self.commands[command.name] = command

    def set_command(self, name: str) -> None:
        """
        Selects the command to run.

        Raises:
            Validation_Error: If no command with that name exists.
        """
        if name not in self.commands:
            raise Validation_Error(f"No such command exists: '{name}'")

        self.selected_command = name

    def build_parser(self, parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
        """Adds one sub-parser per registered command to `parser`."""
        subparsers = parser.add_subparsers(dest="command", required=True)
        for name, command in self.commands.items():
            command.add_arguments(subparsers.add_parser(name, help=command.help))
        return parser

    def run(self, arguments: argparse.Namespace) -> None:
        self._check_selected_command()
        self.commands[self.selected_command].run(arguments)
