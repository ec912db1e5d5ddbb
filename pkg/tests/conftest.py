#: filled by test_acceptance; one (criterion, passed, message) per criterion
ACCEPTANCE_LINES: list[tuple[int, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, msg in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {msg}")
