import pytest

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record ``(label, deviation, tolerance, passed)`` lines for the terminal summary."""

    def record(label, deviation, tolerance, passed=None):
        if passed is None:
            passed = bool(deviation <= tolerance)
        _CRITERIA.append((label, deviation, tolerance, passed))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, dev, tol, passed in _CRITERIA:
        terminalreporter.write_line(
            f"{'PASS' if passed else 'FAIL'}  {label}: measured {dev:.3e} (tolerance {tol:.1e})")
