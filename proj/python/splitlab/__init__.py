"""Numerical diagnostics for integrability of dominated splittings.

Configs are accepted as a path, a YAML string or a dict. Reports come back as
plain dicts that follow the report.json schema in docs/report_schema.md.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence, Union

from . import _core
from ._core import ConfigError, PreconditionError, SplitlabError

__all__ = [
    "ConfigError",
    "PreconditionError",
    "SplitlabError",
    "REPORT_SCHEMA_VERSION",
    "Run",
    "analyze",
    "analyze_to_dir",
    "load_report",
    "lyapunov_spectrum",
    "normalize_config",
    "plot_keys",
    "plotdata",
    "pointwise_ratios",
    "zoo",
]

REPORT_SCHEMA_VERSION: str = _core.REPORT_SCHEMA_VERSION

ConfigLike = Union[str, os.PathLike, Mapping[str, Any]]


def _config_text(config: ConfigLike) -> str:
    # JSON is valid YAML, so dicts pass through json.dumps.
    if isinstance(config, Mapping):
        return json.dumps(config)
    if isinstance(config, os.PathLike) or (isinstance(config, str) and "\n" not in config and os.path.isfile(config)):
        with open(config, encoding="utf-8") as handle:
            return handle.read()
    return str(config)


@dataclass
class Run:
    report: dict
    tables: dict = field(default_factory=dict)
    failed: bool = False


def normalize_config(config: ConfigLike) -> str:
    """Validated config as canonical YAML with every default filled in."""
    return _core.normalize_config(_config_text(config))


def analyze(config: ConfigLike) -> Run:
    """Runs every enabled analysis in memory."""
    report, tables, failed = _core.analyze(_config_text(config))
    return Run(json.loads(report), dict(tables), bool(failed))


def analyze_to_dir(config: ConfigLike, out: Union[str, os.PathLike] = "") -> str:
    """Runs and writes report.json, config.yaml and the CSV tables; returns the run directory."""
    return _core.analyze_to_dir(_config_text(config), os.fspath(out))


def load_report(path: Union[str, os.PathLike]) -> dict:
    return json.loads(_core.load_report(os.fspath(path)))


def plot_keys() -> list:
    return list(_core.plot_keys())


def plotdata(report: Mapping[str, Any], key: str) -> str:
    """CSV text for one plot key, identical to the table written by analyze."""
    return _core.plotdata(json.dumps(report), key)


def zoo() -> list:
    return json.loads(_core.zoo())


def pointwise_ratios(config: ConfigLike, x: Sequence[float]) -> dict:
    return _core.pointwise_ratios(_config_text(config), list(x))


def lyapunov_spectrum(config: ConfigLike, x: Sequence[float], k: int, subbundle: str = "full") -> list:
    return list(_core.lyapunov_spectrum(_config_text(config), list(x), int(k), subbundle))
