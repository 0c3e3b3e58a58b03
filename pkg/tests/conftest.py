import json
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"

sys.path.insert(0, str(REPO_ROOT / "src"))


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    assert FIXTURES.is_dir(), "run `python3 -m ipiagent.fixturegen` first"
    return FIXTURES


def write_trace(path: Path, data: dict) -> Path:
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def minimal_trace(**overrides) -> dict:
    """A tiny valid trace; tests override individual sections."""
    data = {
        "version": 1,
        "dim": 3,
        "classifications": {
            "e1": {"kind": "proactive_instruction",
                   "targets": ["the light turns on"], "task_reference": None},
        },
        "proposals": {
            "the light turns on": {
                "texts": ["the light turns on", "a lamp lights up"],
                "vectors": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            },
        },
        "window_vectors": {
            "1": [0.2, 0.1, 0.9746794344808963],
            "2": [0.3, 0.1, 0.9486832980505138],
        },
        "raw_triggers": {"the light turns on": {"1": 0, "2": 1}},
        "responses": {"the light turns on": {"by_tick": {},
                                             "default": "The light is on."}},
        "answers": {},
        "enhancements": {},
    }
    data.update(overrides)
    return data


def scripted_backends(tmp_path: Path, trace: dict | None = None):
    from ipiagent.backends import Backends, ScriptedBackend, load_trace

    path = write_trace(tmp_path / "trace.json", trace or minimal_trace())
    return Backends(scripted=ScriptedBackend(load_trace(path)))
