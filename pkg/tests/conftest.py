import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record a criterion's verdict; the line is echoed in the terminal summary."""

    def record(number, name, ok, detail, elapsed, budget):
        within = elapsed < budget
        verdict = "PASS" if ok and within else "FAIL"
        line = f"criterion {number:2d} {verdict}  {name}: {detail} [{elapsed:.1f}s / {budget:.0f}s]"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
        assert within, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
