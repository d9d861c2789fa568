"""One-time logging configuration driven by the IDEREG_LOG environment variable."""

from __future__ import annotations

import logging
import os
import sys

LOG_ENV = "IDEREG_LOG"

_LEVELS = {
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

_PACKAGES = ("idereg", "commands")


def configure_logging(value: str | None = None) -> int:
    """Attach a stderr handler to the package loggers and return the level used.

    ``off`` and unknown values silence the packages.
    """
    if value is None:
        value = os.environ.get(LOG_ENV, "off")
    level = _LEVELS.get(value.strip().lower(), logging.CRITICAL + 1)

    formatter = logging.Formatter("%(levelname)s %(name)s: %(message)s")
    for name in _PACKAGES:
        package_logger = logging.getLogger(name)
        for handler in list(package_logger.handlers):
            package_logger.removeHandler(handler)
        if level > logging.CRITICAL:
            package_logger.addHandler(logging.NullHandler())
        else:
            handler = logging.StreamHandler(sys.stderr)
            handler.setFormatter(formatter)
            package_logger.addHandler(handler)
        package_logger.setLevel(level)
        package_logger.propagate = False
    return level
