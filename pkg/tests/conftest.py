import re

import numpy as np
import pytest

from surfnet.density import DensityGrid
from surfnet.mesh import triangulate

ANALYTIC = {
    "peak": lambda x, y: -x ** 2 - y ** 2,
    "pit": lambda x, y: x ** 2 + y ** 2,
    "pass": lambda x, y: -x ** 2 + y ** 2,
    "monkey": lambda x, y: x ** 3 - 3 * x * y ** 2,
}


def lattice_mesh(fn, n=5):
    """Sample ``fn`` on an n x n lattice whose centre vertex sits at the origin."""
    half = n / 2.0
    return triangulate(DensityGrid.from_function(fn, n, n, 1.0, (-half, -half)))


@pytest.fixture
def analytic_mesh():
    def make(name, n=5):
        return lattice_mesh(ANALYTIC[name], n)
    return make


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion; parametrized cases are folded together."""
    verdicts: dict[int, dict] = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_([a-z0-9_]+)", getattr(rep, "nodeid", ""))
            if not m or (outcome != "error" and rep.when != "call"):
                continue
            v = verdicts.setdefault(int(m.group(1)), {"names": [], "ok": 0, "bad": 0})
            name = m.group(2).replace("_", " ")
            if name not in v["names"]:
                v["names"].append(name)
            v["ok" if outcome == "passed" else "bad"] += 1
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for n, v in sorted(verdicts.items()):
            status = "PASS" if not v["bad"] else "FAIL"
            terminalreporter.write_line(f"criterion {n}: {status}  {' / '.join(v['names'])} "
                                        f"({v['ok']}/{v['ok'] + v['bad']} checks)")
