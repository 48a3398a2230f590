"""Runtime configuration: defaults < config file < environment < CLI flags.

The config file is JSON with the documented keys below. Environment
variables use the ``FOOTFALL_`` prefix with the key upper-cased, e.g.
``FOOTFALL_DATA_DIR=/var/lib/footfall``.
"""

from __future__ import annotations

import datetime as dt
import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping
from zoneinfo import ZoneInfo

from .tracker import TrackerConfig

ENV_PREFIX = "FOOTFALL_"

CONFIG_KEYS = (
    "data_dir",
    "timezone",
    "confidence_threshold",
    "iou_threshold",
    "min_hits",
    "max_misses",
    "bind",
    "frames_over_http",
    "lenient",
)

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


@dataclass
class AppConfig:
    data_dir: Path = Path("data")
    timezone: str = "UTC"
    confidence_threshold: float = 0.5
    iou_threshold: float = 0.3
    min_hits: int = 3
    max_misses: int = 15
    bind: str = "127.0.0.1:8000"
    frames_over_http: bool = False
    lenient: bool = False

    def tzinfo(self) -> dt.tzinfo:
        if self.timezone.upper() == "UTC":
            return dt.timezone.utc
        return ZoneInfo(self.timezone)

    def tracker_config(self) -> TrackerConfig:
        return TrackerConfig(
            iou_threshold=self.iou_threshold,
            min_hits=self.min_hits,
            max_misses=self.max_misses,
        )

    def bind_host_port(self) -> tuple[str, int]:
        host, _, port = self.bind.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"bind must be host:port, got {self.bind!r}")
        return host, int(port)

    def validate(self) -> "AppConfig":
        if not (0.0 <= self.confidence_threshold <= 1.0):
            raise ValueError(f"confidence_threshold must be in [0,1]: {self.confidence_threshold}")
        self.tzinfo()  # raises for unknown zones
        self.tracker_config()
        self.bind_host_port()
        return self


def _coerce(name: str, value: Any) -> Any:
    kind = {f.name: f.type for f in fields(AppConfig)}[name]
    if kind == "Path":
        return Path(value)
    if kind == "bool":
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in _BOOL_TRUE:
            return True
        if text in _BOOL_FALSE:
            return False
        raise ValueError(f"config key {name!r}: not a boolean: {value!r}")
    if kind == "int":
        return int(value)
    if kind == "float":
        return float(value)
    return str(value)


def load_config(
    config_path: Path | str | None = None,
    *,
    env: Mapping[str, str] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> AppConfig:
    """Resolve the effective configuration.

    `overrides` holds CLI flag values (None entries are ignored) and wins
    over environment variables, which win over the config file.
    """
    values: dict[str, Any] = {}
    if config_path is not None:
        raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ValueError(f"config file must hold a JSON object: {config_path}")
        for key, value in raw.items():
            if key not in CONFIG_KEYS:
                raise ValueError(f"unknown config key {key!r} in {config_path}")
            values[key] = _coerce(key, value)
    env = os.environ if env is None else env
    for key in CONFIG_KEYS:
        env_value = env.get(ENV_PREFIX + key.upper())
        if env_value is not None:
            values[key] = _coerce(key, env_value)
    if overrides:
        for key, value in overrides.items():
            if value is not None:
                values[key] = _coerce(key, value)
    return AppConfig(**values).validate()
