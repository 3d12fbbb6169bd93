import numpy as np
import pytest

from rstar.chains import ChainSet

ACCEPTANCE: list[tuple[int, bool, str]] = []


def _line(criterion: int, ok: bool, detail: str) -> str:
    return f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


def record(criterion: int, ok: bool, detail: str) -> None:
    """Log one acceptance line; printed again in the terminal summary."""
    ACCEPTANCE.append((criterion, bool(ok), detail))
    print(_line(criterion, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for entry in sorted(ACCEPTANCE, key=lambda e: e[0]):
        terminalreporter.write_line(_line(*entry))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def iid_chains(rng):
    return ChainSet(rng.standard_normal((4, 400, 2)))
