import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "fracmix", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("fracmix")

ACCEPTANCE_LINES = []


@pytest.fixture
def report_line():
    """Record a one-line PASS/FAIL verdict printed at the end of the session."""
    def _record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
