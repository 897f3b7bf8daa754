import pytest

_acceptance: dict[str, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(cid, title): acceptance criterion covered by the test")
    config.addinivalue_line("markers", "slow: long-running numerical check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    cid, title = marker.args
    entry = _acceptance.setdefault(cid, {"title": title, "passed": True, "ran": False, "detail": ""})
    if report.when == "call":
        entry["ran"] = True
    if report.failed:
        entry["passed"] = False
        entry["detail"] = report.longreprtext.strip().splitlines()[-1] if report.longreprtext else ""


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_acceptance, key=lambda c: int(c.split("-")[1])):
        e = _acceptance[cid]
        status = "PASS" if e["passed"] and e["ran"] else ("FAIL" if not e["passed"] else "NOT RUN")
        line = f"{cid} {status}: {e['title']}"
        if status == "FAIL" and e["detail"]:
            line += f"  [{e['detail'][:160]}]"
        terminalreporter.write_line(line)
