"""Command-line interface for uvscatter."""
import logging
import os
import sys
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from uvscatter.controller import ChannelController
from uvscatter.errors import EXIT_FAILURE, UVScatterError

VERBOSITY_ENV = 'UVSCATTER_VERBOSE'
_LEVELS = {0: logging.WARNING, 1: logging.INFO, 2: logging.DEBUG}


def configure_logging(verbosity: int) -> None:
    """Send log records to stderr at WARNING, INFO (-v) or DEBUG (-vv)."""
    level = _LEVELS[max(0, min(verbosity, 2))]
    logging.basicConfig(
        level=level,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
        force=True,
    )


def env_verbosity() -> int:
    try:
        return int(os.environ.get(VERBOSITY_ENV, '0'))
    except ValueError:
        return 0


class CLI:
    """Command-line interface handler for uvscatter."""

    def __init__(self, argv: Optional[List[str]] = None):
        """Initialize the CLI.

        Args:
            argv: Command-line arguments (uses sys.argv if None)
        """
        self.argv = argv
        self.controller: Optional[ChannelController] = None

    @staticmethod
    def display_run_options(command_config: Dict[str, Any], config_path: Optional[str]) -> None:
        """Display what is about to run.

        Args:
            command_config: Configuration of the selected command
            config_path: Run config path, or None for defaults
        """
        print(f"Running {command_config['name']}: {command_config.get('description', '')}")
        print(f"Using run config: {config_path or 'built-in defaults'}")
        print("---")

    def _prepare_and_run(self) -> Dict[str, Any]:
        """Prepare the controller and run the command."""
        configure_logging(env_verbosity())
        self.controller = ChannelController(self.argv)
        configure_logging(max(env_verbosity(), self.controller.factory.args.get('verbose', 0) or 0))

        command_config, config_path = self.controller.get_run_info()
        self.display_run_options(command_config, config_path)

        return self.controller.run_command()

    def run(self) -> int:
        """Run the selected command.

        Returns:
            int: Process exit code
        """
        try:
            self._prepare_and_run()
        except UVScatterError as e:
            print(f"Fatal error: {e}", file=sys.stderr)
            return e.exit_code
        except Exception as e:
            print(f"Fatal error: {e}", file=sys.stderr)
            return EXIT_FAILURE

        print("\nCompleted successfully!")
        return 0


def main(argv: Optional[List[str]] = None) -> None:
    """Console entry point."""
    load_dotenv()
    sys.exit(CLI(argv).run())


if __name__ == '__main__':
    main()
