"""Versioned prompt assets for the live backends.

Scripted runs never touch these. Files are named <name>_v<version>.txt;
load_prompt returns the requested (or latest) version verbatim.
"""

from __future__ import annotations

import re
from importlib import resources

from ..errors import ConfigError

_PATTERN = re.compile(r"^(?P<name>[a-z_]+)_v(?P<version>\d+)\.txt$")


def _catalog() -> dict[str, dict[int, str]]:
    catalog: dict[str, dict[int, str]] = {}
    for entry in resources.files(__package__).iterdir():
        match = _PATTERN.match(entry.name)
        if match:
            catalog.setdefault(match["name"], {})[int(match["version"])] = entry.name
    return catalog


def load_prompt(name: str, version: int | None = None) -> str:
    versions = _catalog().get(name)
    if not versions:
        raise ConfigError(f"no prompt asset named {name!r}")
    chosen = version if version is not None else max(versions)
    filename = versions.get(chosen)
    if filename is None:
        raise ConfigError(f"prompt {name!r} has no version {chosen}")
    return (resources.files(__package__) / filename).read_text(encoding="utf-8")


def render_prompt(template: str, **fields) -> str:
    """Substitute {name} placeholders literally. Plain replace, not
    str.format, because several templates contain JSON braces."""
    out = template
    for key, value in fields.items():
        out = out.replace("{" + key + "}", str(value))
    return out
