import pytest

from nematic_lro import build_torus, dimer

_CRITERIA = {}


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", help="also run the 6561-state lattice checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, text = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        note = getattr(item, "criterion_note", "")
        _CRITERIA[number] = (text, rep.outcome, f"{rep.duration:.1f}s", note)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        text, outcome, dur, note = _CRITERIA[number]
        status = "PASS" if outcome == "passed" else "FAIL" if outcome == "failed" else outcome.upper()
        line = f"criterion {number}: {status:4s} {text} ({dur})"
        if note:
            line += f" | {note}"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def chain4():
    return build_torus(1, 4)


@pytest.fixture(scope="session")
def square2():
    return build_torus(2, 2)


@pytest.fixture(scope="session")
def bond():
    return dimer()
