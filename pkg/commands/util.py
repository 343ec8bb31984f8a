# Copyright (c) mm-opinion-miner contributors
"""
Utility functions for command line parsing: boolean and list converters,
TOML config files and logging setup.
"""
import logging
import sys

import fsspec

from absa.errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

__all__ = [
    "strtobool",
    "comma_list",
    "int_list",
    "flags",
    "load_config",
    "require",
    "configure_logging",
    "metrics_table",
]

_TRUE = ("y", "yes", "t", "true", "on", "1")
_FALSE = ("n", "no", "f", "false", "off", "0")

LOG_FORMAT = "%(asctime)s %(levelname)s %(message)s"

SUMMARY_METRICS = ("ae_precision", "ae_recall", "ae_f1", "sc_macro_f1",
                   "sc_accuracy")


def strtobool(value: Union[str, bool]) -> bool:
    """
    Interpret yes/no style strings. Booleans (as TOML files produce them)
    pass through.
    """
    if isinstance(value, bool):
        return value
    lowered = str(value).strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError(f"invalid truth value {value!r}")


def comma_list(value: Union[str, List[Any]]) -> List[str]:
    """`"a, b"` and `["a", "b"]` both give `["a", "b"]`."""
    if isinstance(value, list):
        return [str(v).strip() for v in value]
    return [y.strip() for y in str(value).split(",") if y.strip()]


def int_list(value: Union[str, List[Any]]) -> List[int]:
    return [int(v) for v in comma_list(value)]


def flags(name: str) -> List[str]:
    """Option strings for a config key: `--video-feats` and `--video_feats`."""
    dashed = f"--{name.replace('_', '-')}"
    plain = f"--{name}"
    return [dashed] if dashed == plain else [dashed, plain]


def load_config(path: str, section: Optional[str] = None) -> Dict[str, Any]:
    """
    Read a TOML config file. Top-level keys apply to every command; a table
    named after the command overrides them. Other tables are ignored.
    """
    try:
        with fsspec.open(path, "rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML in {path}: {e}") from None

    values = {k: v for k, v in data.items() if not isinstance(v, dict)}
    if section is not None:
        table = data.get(section, {})
        if not isinstance(table, dict):
            raise ConfigError(f"{path}: [{section}] must be a table")
        values.update(table)
    logging.debug(f"read {len(values):,} settings from {path}")
    return values


def require(args: Mapping[str, Any], *names: str) -> None:
    """Fail unless every named setting came from a flag or the config file."""
    missing = [n for n in names if args.get(n) in (None, "")]
    if missing:
        shown = ", ".join(flags(n)[0] for n in missing)
        raise ConfigError(f"missing required setting(s) {shown} (as flags "
                          "or keys in the config file)")


def configure_logging(debug: bool = False) -> None:
    logging.basicConfig(level=logging.DEBUG if debug else logging.INFO,
                        format=LOG_FORMAT, force=True)


def metrics_table(rows: Mapping[str, Mapping[str, float]],
                  metrics: Sequence[str] = SUMMARY_METRICS) -> str:
    """Rows of metrics, one column per metric present in every row."""
    shown = [m for m in metrics if rows and all(m in r for r in rows.values())]
    width = max([len(name) for name in rows] + [8]) + 2
    header = f"{'run':<{width}}" + "".join(f"{m:>14}" for m in shown)
    lines = [header, "-" * len(header)]
    for name, row in rows.items():
        lines.append(f"{name:<{width}}"
                     + "".join(f"{row[m]:>14.4f}" for m in shown))
    return "\n".join(lines)
