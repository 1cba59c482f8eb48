import functools
import os

import pytest

from hermovoid.gf import Params, build_field_ctx
from hermovoid.search import SearchOptions, run_search

SLOW_ENV = "HERMOVOID_SLOW"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion this test checks")
    config._criteria = {}


def pytest_collection_modifyitems(config, items):
    if os.environ.get(SLOW_ENV) == "1":
        return
    skip = pytest.mark.skip(reason=f"slow; set {SLOW_ENV}=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    table = item.config._criteria.setdefault(name, {"description": marker.args[1], "outcomes": []})
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if hasattr(report, "wasxfail"):
            status = "xfail"
        elif report.skipped:
            status = "skip"
        else:
            status = report.outcome
        table["outcomes"].append((item.name, status))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    criteria = config._criteria
    if not criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(criteria, key=lambda c: int(c[2:])):
        entry = criteria[name]
        statuses = [s for _, s in entry["outcomes"]]
        if statuses and all(s == "skip" for s in statuses):
            verdict = "SKIP"
        elif all(s in ("passed", "skip") for s in statuses):
            verdict = "PASS"
        else:
            verdict = "FAIL"
        failing = [n for n, s in entry["outcomes"] if s not in ("passed", "skip")]
        detail = f"  (not met: {', '.join(failing)})" if failing else ""
        terminalreporter.write_line(f"{name} {verdict}: {entry['description']}{detail}")


@pytest.fixture(scope="session")
def field():
    return lambda p, d, n: build_field_ctx(Params(p, d, n))


@functools.lru_cache(maxsize=None)
def _search(params: tuple, include_s1: bool = True, pruning=None, workers: int = 1):
    options = SearchOptions(Params(*params), include_s1=include_s1, workers=workers)
    if pruning is not None:
        options = SearchOptions(Params(*params), pruning=pruning, include_s1=include_s1, workers=workers)
    return run_search(options)


@pytest.fixture(scope="session")
def search():
    return _search
