"""Shared fixtures.

The three s_max = 1e4 trajectories are the expensive objects the
asymptotics and acceptance tests share.  SolutionPool solves each one
exactly once per session, inside a per-session cache directory, and
keeps the fresh-solve wall time: the acceptance suite asserts runtime
off these recorded numbers, so nothing else may warm those cache keys.
"""

import os
import time

import pytest

from hankelp3.numkernel import PrecisionCtx
from hankelp3.painleve import integrate


class SolutionPool:
    def __init__(self):
        self._entries = {}

    def get(self, alpha, s_max="1e4", tol="1e-25"):
        """(solution, fresh-solve wall seconds) for the key."""
        key = (alpha, s_max, tol)
        if key not in self._entries:
            t0 = time.perf_counter()
            sol = integrate(alpha, s_max, tol, PrecisionCtx(bits=64))
            self._entries[key] = (sol, time.perf_counter() - t0)
        return self._entries[key]


@pytest.fixture(scope="session", autouse=True)
def session_cache_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("piii-cache")
    old = os.environ.get("HANKELP3_CACHE_DIR")
    os.environ["HANKELP3_CACHE_DIR"] = str(d)
    yield str(d)
    if old is None:
        os.environ.pop("HANKELP3_CACHE_DIR", None)
    else:
        os.environ["HANKELP3_CACHE_DIR"] = old


@pytest.fixture(scope="session")
def piii_pool(session_cache_dir):
    return SolutionPool()


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
