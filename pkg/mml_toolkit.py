"""
Command-Line Interface (CLI) Entry Point.

Runs the MML toolkit headless: model evaluation, sampling, figure data and the
validation suite. See ``python mml_toolkit.py --help`` for the commands.
"""

import logging

from src.ui.cli import cli


def main():
    """
    Main function for the CLI.
    Configures logging and dispatches to the click command group.
    """
    logging.basicConfig(
        level=logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    cli.main(prog_name="mml_toolkit")


if __name__ == "__main__":
    main()
