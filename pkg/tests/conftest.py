import pytest

# Lines recorded by the acceptance suite, echoed in the terminal summary.
CRITERIA_LINES: list[str] = []


@pytest.fixture
def criterion(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    def record(name: str, ok: bool, detail: str) -> bool:
        line = f"CRITERION {name}: {'PASS' if ok else 'FAIL'} - {detail}"
        CRITERIA_LINES.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)
