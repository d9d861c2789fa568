"""Subcommands of the idereg command-line tool."""
