import pytest

from reprompt.providers.mock import MockProviders, planted_image
from reprompt.scoring import ClipScorer


@pytest.fixture
def mock_providers():
    return MockProviders()


@pytest.fixture
def scorer(mock_providers):
    return ClipScorer(mock_providers)


@pytest.fixture
def cat_reference():
    return planted_image(["cat", "blue", "bow", "tie"])


_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _ACCEPTANCE_RESULTS.append((name, "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{outcome}: {name}")
