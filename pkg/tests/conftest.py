import numpy as np
import pytest

from liouville_dmd import KernelSpec, fit, segment_all, synthesize

_RESULTS = {}


@pytest.fixture(scope="session")
def oscillator_trajs():
    """10 rotation trajectories, T=1, dt=0.005, cut into 40-sample segments."""
    return segment_all(synthesize("oscillator", 10, T=1.0, dt=0.005, seed=0), 40, 40)


@pytest.fixture(scope="session")
def oscillator_model(oscillator_trajs):
    return fit(oscillator_trajs, KernelSpec.gaussian(5.0))


@pytest.fixture(scope="session")
def decay_model():
    trajs = segment_all(synthesize("decay", 10, T=1.0, dt=0.005, seed=0), 40, 40)
    return fit(trajs, KernelSpec.gaussian(5.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(cid, text): acceptance criterion identifier")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        cid, text = mark.args
        if hasattr(item, "callspec"):
            text = f"{text} [{item.callspec.id}]"
        detail = ""
        if report.failed and call.excinfo is not None:
            detail = call.excinfo.exconly().splitlines()[0][:160]
        _RESULTS[item.nodeid] = (cid, text, report.outcome, report.duration, detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid, text, outcome, duration, detail in sorted(_RESULTS.values(), key=lambda r: _cid_key(r[0])):
        verdict = "PASS" if outcome == "passed" else "FAIL" if outcome == "failed" else outcome.upper()
        line = f"[{verdict}] criterion {cid:<4} {text} ({duration:.2f}s)"
        tr.write_line(line + (f" -- {detail}" if detail else ""))


def _cid_key(cid):
    digits = "".join(c for c in cid if c.isdigit())
    return int(digits or 0), cid
