import sys


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 8):
        terminalreporter.write_line(module.RESULTS.get(n, f"criterion {n}: FAIL (not run)"))
