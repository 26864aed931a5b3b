import pytest

CRITERIA = {
    1: "geometry oracles",
    2: "distance-ratio property",
    3: "affinity oracle equivalence",
    4: "metric laws",
    5: "hand-traced toy fixture",
    6: "signal recovery on synthetic data",
    7: "determinism and leakage",
    8: "ingest conformance",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    k = marker.args[0]
    # an expected failure still means the criterion is not met
    failed = report.failed or (report.when == "call" and report.skipped)
    _outcomes.setdefault(k, []).append(not failed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for k, title in CRITERIA.items():
        results = _outcomes.get(k)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {k} [{status}] {title}")
