import os
from collections import defaultdict

import numpy as np
import pytest

from aggmarket.choice import ValueMatrix

CRITERIA = {
    1: "worked welfare examples",
    2: "creation regimes",
    3: "oracle equivalence",
    4: "monotonicity",
    5: "replacement",
    6: "mechanism comparison",
    7: "dataset-conditional",
}
# seconds per criterion, summed over its checks
BUDGETS = {1: 1, 2: 5, 3: 60, 4: 30, 5: 30, 6: 10}

_outcomes = defaultdict(list)


def random_market(rng, n_models, n_tasks, lo=0.0, hi=10.0):
    return ValueMatrix(
        tuple(f"m{i}" for i in range(n_models)),
        tuple(f"t{j}" for j in range(n_tasks)),
        rng.uniform(lo, hi, (n_models, n_tasks)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def pair_market():
    return ValueMatrix.from_rows({"A": [6, 8], "B": [7, 5]})


@pytest.fixture
def triple_market():
    return ValueMatrix.from_rows({"A": [8, 5], "B": [5, 8], "C": [6, 8.1]})


@pytest.fixture
def single_five():
    return ValueMatrix.from_rows({"inc": [5, 5]})


@pytest.fixture
def double_five():
    return ValueMatrix.from_rows({"a": [5, 5], "b": [5, 5]})


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance", None)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = "xfailed" if hasattr(report, "wasxfail") else report.outcome
        _outcomes[marker].append((report.nodeid.split("::")[-1], outcome, report.duration))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is not None:
        rep.acceptance = m.kwargs.get("criterion", m.args[0] if m.args else None)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in sorted(_outcomes):
        results = _outcomes[c]
        outcomes = {o for _, o, _ in results}
        secs = sum(d for _, _, d in results)
        budget = BUDGETS.get(c)
        slow = budget is not None and secs > budget
        if outcomes & {"failed", "xfailed"} or slow:
            status = "FAIL"
        elif outcomes == {"skipped"}:
            status = "SKIP"
        else:
            status = "PASS"
        limit = f" / {budget}s budget" if budget is not None else ""
        tr.write_line(f"criterion {c} ({CRITERIA.get(c, '')}): {status}  [{len(results)} checks, {secs:.2f}s{limit}]")
        if slow:
            tr.write_line("    over runtime budget")
        for name, o, _ in results:
            if o != "passed":
                tr.write_line(f"    {o.upper()}: {name}")
    if not os.environ.get("AGGMARKET_BENCHMARK_CSV"):
        tr.write_line("note: criterion 7 needs AGGMARKET_BENCHMARK_CSV=<scores.csv> and was skipped")
