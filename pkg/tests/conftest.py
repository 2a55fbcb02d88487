"""Pytest wiring: one PASS/FAIL line per acceptance criterion after the run."""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for key, ok in (("passed", True), ("failed", False)):
        for report in terminalreporter.stats.get(key, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" in nodeid and getattr(report, "when", "") == "call":
                rows.append((nodeid.split("::")[-1], ok))
    if not rows:
        return
    rows.sort()
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, ok in rows:
        label = name.removeprefix("test_criterion_").replace("_", " ")
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {label}")
