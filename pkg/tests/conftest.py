"""Shared pytest hooks: print one pass/fail line per acceptance criterion."""


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    status = "PASS" if report.passed else "FAIL"
    print(f"[acceptance] {name}: {status}")
