"""Command-line interface: one subcommand per toolkit workflow."""

from avrelscore.cli.runner import cli, main

__all__ = ["cli", "main"]
