from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def _compare(stored, fresh, tol, where="root"):
    if isinstance(stored, dict):
        assert isinstance(fresh, dict) and stored.keys() == fresh.keys(), f"{where}: keys differ"
        for key in stored:
            _compare(stored[key], fresh[key], tol, f"{where}.{key}")
    elif isinstance(stored, list):
        assert isinstance(fresh, list) and len(stored) == len(fresh), f"{where}: lengths differ"
        for i, (a, b) in enumerate(zip(stored, fresh)):
            _compare(a, b, tol, f"{where}[{i}]")
    elif isinstance(stored, float) or isinstance(fresh, float):
        a, b = float(stored), float(fresh)
        if math.isnan(a) or math.isnan(b):
            assert math.isnan(a) and math.isnan(b), f"{where}: {a} vs {b}"
        else:
            assert a == b or abs(a - b) <= tol * max(abs(a), abs(b)), f"{where}: {a!r} vs {b!r}"
    else:
        assert stored == fresh, f"{where}: {stored!r} vs {fresh!r}"


def check_regression(name: str, data, tol: float = 1e-9):
    """Compare ``data`` with ``fixtures/<name>.json``; write it on first use."""
    path = FIXTURES / f"{name}.json"
    fresh = json.loads(json.dumps(data))
    if not path.exists():
        FIXTURES.mkdir(exist_ok=True)
        path.write_text(json.dumps(fresh, indent=2, sort_keys=True) + "\n")
        return fresh
    _compare(json.loads(path.read_text()), fresh, tol)
    return fresh


@pytest.fixture
def regression():
    return check_regression


_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """``criterion(number, ok, detail)`` records one acceptance line."""

    def record(number: int, ok: bool, detail: str):
        _ACCEPTANCE[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
