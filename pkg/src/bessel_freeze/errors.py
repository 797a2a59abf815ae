"""Shared exception base so the CLI can map failures to exit codes."""


class BesselFreezeError(Exception):
    """Base class for every error raised by this package."""
