def pytest_terminal_summary(terminalreporter):
    lines = []
    for report in terminalreporter.getreports("passed") + terminalreporter.getreports("failed"):
        if report.when != "call":
            continue
        for key, value in report.user_properties:
            if key == "acceptance":
                lines.append(value)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(lines):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {name}: {detail}")
