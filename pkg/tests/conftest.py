import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL/SKIP line per acceptance criterion."""

    def record(number: int, status: bool | str, detail: str) -> bool:
        label = status if isinstance(status, str) else ("PASS" if status else "FAIL")
        line = f"criterion {number:>2}: {label:4}  {detail}"
        print(line)
        _ACCEPTANCE.append(line)
        return status is True

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
