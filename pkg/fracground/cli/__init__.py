"""Command line entry point and run artifacts."""
