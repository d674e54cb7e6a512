import pytest

_CRITERIA = {}


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="also run tests marked slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    number, title = mark.args
    detail = getattr(item, "criterion_detail", "")
    _CRITERIA[number] = (title, "PASS" if rep.passed else "FAIL", detail)


@pytest.fixture
def detail(request):
    """Attach a one-line measurement summary to the current criterion."""

    def put(text):
        request.node.criterion_detail = text

    return put


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, info = _CRITERIA[number]
        line = f"[{status}] criterion {number:>2}: {title}"
        if info:
            line += f" | {info}"
        tr.write_line(line)
    passed = sum(1 for v in _CRITERIA.values() if v[1] == "PASS")
    tr.write_line(f"{passed}/{len(_CRITERIA)} criteria passed")
