"""Command-line feature slice: run configuration, commands and exports."""
