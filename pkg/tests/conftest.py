"""Echo recorded acceptance verdicts after the run, outside capture."""

import acceptance_report


def pytest_terminal_summary(terminalreporter):
    if not acceptance_report.lines:
        return
    terminalreporter.ensure_newline()
    terminalreporter.section("acceptance criteria", sep="-")
    for line in acceptance_report.lines:
        terminalreporter.write_line(line)
