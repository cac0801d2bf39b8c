import pytest

_ACCEPTANCE = []


@pytest.fixture
def acceptance_report():
    """Callable that records one PASS/FAIL line for the terminal summary."""

    def record(number, ok, detail, elapsed):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.2f} s]"
        _ACCEPTANCE.append((number, line))
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
