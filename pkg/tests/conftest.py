import helpers


def pytest_terminal_summary(terminalreporter):
    if helpers.CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(helpers.CRITERIA):
            terminalreporter.write_line(helpers.CRITERIA[number])
