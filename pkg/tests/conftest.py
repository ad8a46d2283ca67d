"""Collects per-criterion verdict lines from the acceptance tests and echoes
them in the terminal summary, outside pytest's output capture."""

VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
