"""Controller module for uvscatter command execution."""
from typing import Any, Dict, List, Optional, Tuple

from uvscatter.commands import ICommand
from uvscatter.factory import Factory
from uvscatter.scenario import Scenario


class ChannelController:
    """Controller class that wires the factory, run config, and commands."""

    def __init__(self, argv: Optional[List[str]] = None):
        """Initialize the controller with factory and scenario.

        Args:
            argv: Command-line arguments (uses sys.argv if None)
        """
        self.factory = self._initialize_factory(argv)
        self.scenario = self._initialize_scenario()

    @staticmethod
    def _initialize_factory(argv: Optional[List[str]] = None) -> Factory:
        """Initialize factory with the packaged application configuration.

        Returns:
            Factory: Initialized factory instance
        """
        return Factory(argv=argv)

    def _initialize_scenario(self) -> Scenario:
        """Initialize and load the run configuration.

        Returns:
            Scenario: Scenario with the resolved run config
        """
        config_manager = self.factory.get_service('config_manager')
        scenario = Scenario(config_manager)

        config_arg = self.factory.app_config.get('cli', {}).get('config_arg', 'config')
        config_path = self.factory.args.get(config_arg)
        scenario.load(config_path, self.factory.get_overrides())

        return scenario

    def get_run_info(self) -> Tuple[Dict[str, Any], Optional[str]]:
        """Get information about the command about to run.

        Returns:
            Tuple containing:
            - The command configuration
            - Run config path, or None when running on defaults
        """
        command_config = self.factory.get_command_config(self.factory.args['command'])
        config_arg = self.factory.app_config.get('cli', {}).get('config_arg', 'config')
        return command_config, self.factory.args.get(config_arg)

    def run_command(self) -> Dict[str, Any]:
        """Run the requested command.

        Returns:
            dict: The command's result
        """
        command: ICommand = self.factory.create_command(self.factory.args['command'])
        return command.run(args=self.factory.args, scenario=self.scenario)
