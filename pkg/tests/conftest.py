import pytest

from pstable.psolve import ProblemSpec, continue_branch

_CACHE = {}


def branch_for(n, p=2.0, M=2000):
    key = (n, p, M)
    if key not in _CACHE:
        _CACHE[key] = continue_branch(ProblemSpec(n, p, M=M))
    return _CACHE[key]


@pytest.fixture(scope="session")
def branches():
    return branch_for


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        ok, text = RESULTS[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {text}")
