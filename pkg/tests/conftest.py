ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, secs, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'} ({secs:.1f}s) {detail}")
