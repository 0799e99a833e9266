from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from timd_lab.frame_io import load_plane

DATA = Path(__file__).parent / "data"
CORPUS = ("camera", "astronaut", "coffee")

# criterion number -> (title, passed, detail), filled by test_acceptance
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def record_acceptance():
    def record(number: int, title: str, passed: bool, detail: str = ""):
        ACCEPTANCE[number] = (title, bool(passed), detail)
        assert passed, f"criterion {number} ({title}) failed: {detail}"
    return record


@pytest.fixture(scope="session")
def corpus():
    return {name: load_plane(DATA / f"{name}.pgm") for name in CORPUS}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:2d}. {title}" + (f" ({detail})" if detail else ""))
