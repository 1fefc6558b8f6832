from pathlib import Path

from hypothesis import settings
import pytest

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


@pytest.fixture
def problems_dir():
    return PROBLEMS


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
