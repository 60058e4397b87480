import pytest

_results: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.get_closest_marker("acceptance") is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        props = dict(item.user_properties)
        label = props.get("criterion", item.name)
        verdict = "PASS" if rep.passed else "FAIL"
        _results.append((label, verdict, props.get("measured", "")))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for label, verdict, measured in _results:
        line = f"{verdict} {label}"
        if measured:
            line += f"  [{measured}]"
        terminalreporter.write_line(line)
