"""stderr reporting for cascadelab.

Three channels, filtered by CASCADELAB_VERBOSE (or -v / -vv):

    0   failures and errors only
    1   plus warnings: coarse cells, forced regime overrides   (default)
    2   plus progress: level growth, replica counts, notes

stdout carries results only; anything a user might want to silence goes
through here. Failures are written as a single JSON object so scripts can
parse them from stderr.
"""

import json
import logging
import os
import sys
import time
from contextlib import contextmanager

_logger = logging.getLogger("cascadelab")

PROGRESS = 15
logging.addLevelName(PROGRESS, "PROGRESS")

_THRESHOLDS = (logging.ERROR, logging.WARNING, PROGRESS)


class _StderrHandler(logging.StreamHandler):
    """Bare messages on whatever sys.stderr is at emit time."""

    def __init__(self):
        super().__init__(sys.stderr)
        self.setFormatter(logging.Formatter("%(message)s"))

    def emit(self, record):
        self.stream = sys.stderr
        super().emit(record)


def _env_verbosity():
    raw = os.environ.get("CASCADELAB_VERBOSE", "1")
    try:
        return int(raw)
    except ValueError:
        return 1


def configure(verbose=None):
    """Install the stderr handler at ``verbose`` (clamped to 0..2).

    None reads CASCADELAB_VERBOSE; unparsable values mean 1.
    """
    level = _env_verbosity() if verbose is None else verbose
    level = max(0, min(len(_THRESHOLDS) - 1, level))

    _logger.handlers.clear()
    _logger.addHandler(_StderrHandler())
    _logger.setLevel(_THRESHOLDS[level])
    _logger.propagate = False


configure()


# -- channels -----------------------------------------------------------------


def error(msg):
    _logger.error(msg)


def warn(msg):
    _logger.warning(msg)


def progress(msg):
    _logger.log(PROGRESS, msg)


def failure(err, exit_code):
    """Emit the machine-readable error record for ``err``."""
    error(json.dumps({
        "error": type(err).__name__,
        "message": str(err),
        "exit_code": exit_code,
    }, ensure_ascii=False))


@contextmanager
def timed(label, enabled=True):
    """Report ``label`` with its wall time at progress level on exit."""
    t0 = time.monotonic()
    yield
    if enabled:
        progress(f"  {label} in {time.monotonic() - t0:.2f}s")
