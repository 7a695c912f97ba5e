"""Factory module for creating service and command instances."""
import argparse
import importlib
from pathlib import Path
from typing import Any, Dict, List, Optional, Type, TypeVar

from uvscatter.config import IConfigLoader, ConfigManager
from uvscatter.errors import ConfigError


# Type variable for generic service instances
T = TypeVar('T')

DEFAULT_APP_CONFIG = Path(__file__).with_name('app_config.toml')

_TYPES = {'int': int, 'float': float, 'str': str}


class Factory:
    """Factory for creating service and command instances based on configuration."""

    def __init__(self, config_path: Optional[str] = None, argv: Optional[List[str]] = None):
        """
        Initialize factory with application config.

        Args:
            config_path: Path to the application configuration file
            argv: Command-line arguments (uses sys.argv if None)
        """
        if config_path is None:
            config_path = str(DEFAULT_APP_CONFIG)

        self._config_loader: IConfigLoader = ConfigManager()
        self.app_config: Dict[str, Any] = self._config_loader.load(config_path)
        self._service_instances: Dict[str, Any] = {}
        self.args: Dict[str, Any] = self._parse_args(argv)

    def get_service(self, service_name: str) -> Any:
        """Get a service instance by name.

        Args:
            service_name: Name of the service to get

        Returns:
            Any: Instance of the requested service
        """
        if service_name in self._service_instances:
            return self._service_instances[service_name]

        if service_name not in self.app_config['services']:
            raise ValueError(f"Service '{service_name}' not found in configuration")

        class_path = self.app_config['services'][service_name]
        service_instance = self._create_instance_from_path(class_path)
        self._service_instances[service_name] = service_instance

        return service_instance

    @staticmethod
    def _add_argument(parser: argparse.ArgumentParser, arg_config: Dict[str, Any]) -> None:
        """Add one ``[[cli.args]]`` or ``[[commands.args]]`` entry to a parser."""
        arg_name = arg_config['name']
        names = [f"--{arg_name}"]
        if arg_config.get('short'):
            names.insert(0, f"-{arg_config['short']}")
        help_text = arg_config.get('help', '')

        if arg_config.get('action') == 'count':
            parser.add_argument(*names, action='count', default=0, help=help_text)
        elif arg_config.get('flag', False):
            parser.add_argument(*names, action='store_const', const=arg_config.get('value', True),
                                default=None, help=help_text)
        else:
            parser.add_argument(
                *names,
                type=_TYPES[arg_config.get('type', 'str')],
                choices=arg_config.get('choices'),
                default=arg_config.get('default'),
                help=help_text
            )

    def setup_argument_parser(self) -> argparse.ArgumentParser:
        """Create an argument parser with dynamically configured arguments.

        Returns:
            argparse.ArgumentParser: Configured argument parser
        """
        cli_config = self.app_config.get('cli', {})
        parser = argparse.ArgumentParser(
            prog=cli_config.get('prog', 'uvscatter'),
            description=cli_config.get('description', '')
        )
        parser.add_argument(
            f"--{cli_config.get('config_arg', 'config')}",
            default=None,
            help=cli_config.get('config_help', 'Path to the run configuration')
        )

        for arg_config in cli_config.get('args', []):
            if arg_config.get('name'):
                self._add_argument(parser, arg_config)

        subparsers = parser.add_subparsers(dest='command', required=True, metavar='command')
        for command in self.get_commands():
            subparser = subparsers.add_parser(command['name'], help=command.get('description', ''),
                                              description=command.get('description', ''))
            for arg_config in command.get('args', []):
                subparser.add_argument(
                    arg_config['name'],
                    type=_TYPES[arg_config.get('type', 'str')],
                    help=arg_config.get('help', '')
                )

        return parser

    def _parse_args(self, args: Optional[List[str]] = None) -> Dict[str, Any]:
        """Parse command-line arguments.

        Args:
            args: Command-line arguments to parse (uses sys.argv if None)

        Returns:
            dict: Parsed arguments
        """
        parser = self.setup_argument_parser()
        parsed_args = parser.parse_args(args)

        return vars(parsed_args)

    def get_overrides(self) -> Dict[str, Any]:
        """Map parsed global options onto their dotted run-config keys."""
        overrides: Dict[str, Any] = {}
        for arg_config in self.app_config.get('cli', {}).get('args', []):
            config_key = arg_config.get('config_key')
            if not config_key:
                continue
            value = self.args.get(arg_config['name'].replace('-', '_'))
            if value is None:
                continue
            overrides[config_key] = [value] if arg_config.get('as_list', False) else value
        return overrides

    def get_commands(self) -> List[Dict[str, Any]]:
        """Get the subcommand configurations.

        Returns:
            List[Dict[str, Any]]: Command configurations in declaration order
        """
        return list(self.app_config.get('commands', []))

    def get_command_config(self, command_name: str) -> Dict[str, Any]:
        for command in self.get_commands():
            if command['name'] == command_name:
                return command
        raise ConfigError(f"Command '{command_name}' not found in configuration")

    def create_command(self, command_name: str) -> Any:
        """
        Create a command instance by name.

        Args:
            command_name: Name of the command to create

        Returns:
            Any: Command instance with the factory injected
        """
        command_config = self.get_command_config(command_name)
        command_class = self._get_class_from_path(command_config['class'])
        return command_class(factory=self)

    @staticmethod
    def _get_class_from_path(class_path: str) -> Type[Any]:
        """Get a class object from its fully-qualified path.

        Args:
            class_path: String with module path and class name

        Returns:
            Type[Any]: The class object
        """
        module_path, class_name = class_path.rsplit('.', 1)
        module = importlib.import_module(module_path)
        return getattr(module, class_name)

    def _create_instance_from_path(self, class_path: str) -> Any:
        """Instantiate a class from its fully-qualified path."""
        cls = self._get_class_from_path(class_path)
        return cls()
