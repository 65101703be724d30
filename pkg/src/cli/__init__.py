"""Command-line interface: bagforge <command> [flags]."""

from src.cli.main import build_parser, dispatch, main

__all__ = ["build_parser", "dispatch", "main"]
