import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cvqkd_wdm.cvqkd_model import QkdParams  # noqa: E402
from cvqkd_wdm.network import build_spanish_topology  # noqa: E402


@pytest.fixture
def params():
    return QkdParams()


@pytest.fixture
def spain():
    return build_spanish_topology(0.01)


_SESSION_START = time.perf_counter()
SUITE_RUNTIME_LIMIT_S = 120.0


def pytest_terminal_summary(terminalreporter):
    lines = list(getattr(sys.modules.get("test_acceptance"), "REPORT", []))
    if not lines:
        return
    elapsed = time.perf_counter() - _SESSION_START
    ok = elapsed < SUITE_RUNTIME_LIMIT_S
    lines.append(f"{'PASS' if ok else 'FAIL'} suite runtime: {elapsed:.1f} s (limit {SUITE_RUNTIME_LIMIT_S:.0f} s)")
    terminalreporter.section("acceptance")
    for line in lines:
        terminalreporter.write_line(line)
