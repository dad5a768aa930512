"""Load defaults from a config file so flags don't need repeating.

Searches for config in this order (first found wins):

    1. ./cascadelab.toml          (project-local)
    2. ~/.config/cascadelab.toml  (user-level)

Config is TOML format:

    [run]
    seed = 7
    threads = 4

    [simulate]
    depth = 12

    [ensemble]
    depth = 12
    count = 10000
    tail = 10

    [tau]
    q = "1,2,4"
    level_lo = 2
    level_hi = 8

    [moments]
    order = 4

CLI flags always override config file values.
"""

import os
from pathlib import Path

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:
    try:
        import tomli as tomllib  # type: ignore[no-redef]
    except ModuleNotFoundError:
        tomllib = None  # type: ignore[assignment]

from . import log as _log


def _search_paths():
    """Return config search paths, evaluated at call time."""
    return [
        Path("cascadelab.toml"),
        Path(os.environ.get("XDG_CONFIG_HOME", Path.home() / ".config"))
        / "cascadelab.toml",
    ]


def find_config():
    """Return the path to the first config file found, or None."""
    for p in _search_paths():
        if p.is_file():
            return p
    return None


def load_config(path=None):
    """Load config from a TOML file. Returns a dict (empty if no file/parser)."""
    if path is None:
        path = find_config()
    if path is None:
        return {}
    if tomllib is None:
        return {}

    path = Path(path)
    if not path.is_file():
        return {}

    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except Exception as e:
        _log.warn(f"Warning: could not parse {path}: {e}")
        return {}


# Section → {config key: argparse attribute}.
_SECTIONS = {
    "run": {"seed": "seed", "threads": "threads"},
    "simulate": {"depth": "depth"},
    "ensemble": {"depth": "depth", "count": "count", "tail": "tail"},
    "tau": {"q": "q", "level_lo": "level_lo", "level_hi": "level_hi"},
    "moments": {"order": "order"},
}

# The section that applies to each subcommand besides [run].
_COMMAND_SECTION = {
    "simulate": "simulate",
    "timechange": "simulate",
    "ensemble": "ensemble",
    "clt": "ensemble",
    "tau": "tau",
    "moments": "moments",
}

_EXPECTED_TYPES = {
    "seed": int,
    "threads": int,
    "depth": int,
    "count": int,
    "tail": int,
    "q": str,
    "level_lo": int,
    "level_hi": int,
    "order": int,
}


def apply_config(args, config):
    """Apply config defaults to an argparse Namespace.

    Only sets values that are still None. CLI flags always win.
    """
    _apply_section(args, config.get("run", {}), _SECTIONS["run"])
    section = _COMMAND_SECTION.get(getattr(args, "command", None))
    if section is not None:
        _apply_section(args, config.get(section, {}), _SECTIONS[section])


def resolve_threads(threads=None):
    """--threads, else CASCADELAB_THREADS, else machine parallelism."""
    if threads is not None and threads > 0:
        return threads
    env = os.environ.get("CASCADELAB_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            _log.warn(f"Warning: CASCADELAB_THREADS={env!r} is not an integer; ignoring.")
        else:
            if value > 0:
                return value
    return os.cpu_count() or 1


def _apply_section(args, section, mapping):
    """Apply a config section to args. Only fills in None/unset values."""
    for config_key, attr_name in mapping.items():
        if not hasattr(args, attr_name):
            continue
        if getattr(args, attr_name) is not None:
            continue
        if config_key not in section:
            continue
        value = section[config_key]
        expected = _EXPECTED_TYPES.get(config_key)
        if expected is not None and (not isinstance(value, expected)
                                     or isinstance(value, bool)):
            _log.warn(
                f"Warning: config key '{config_key}' should be "
                f"{expected.__name__}, got {type(value).__name__}; "
                f"ignoring."
            )
            continue
        setattr(args, attr_name, value)
