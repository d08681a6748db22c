"""Collects acceptance outcomes and prints one line per criterion at the end."""
import pytest

_OUTCOMES = {}
_RANK = ["PASS", "SKIP", "FAIL"]


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        state = "SKIP" if rep.skipped else "PASS" if rep.passed else "FAIL"
        prev = _OUTCOMES.get(number, (title, "PASS"))[1]
        # a criterion passes only when every test behind it passes
        _OUTCOMES[number] = (title, max(prev, state, key=_RANK.index))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        title, state = _OUTCOMES[number]
        terminalreporter.write_line(f"criterion {number:>2}: {state}  {title}")
