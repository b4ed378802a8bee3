import pytest

_VERDICTS = {}


@pytest.fixture
def verdict(request):
    """Record ``(passed, detail)`` for an acceptance criterion."""
    number = request.node.get_closest_marker("criterion").args[0]

    def record(passed, detail):
        _VERDICTS[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    numbers = sorted({m.args[0] for item in getattr(terminalreporter, "_acceptance_items", [])
                      for m in item.iter_markers("criterion")} | set(_VERDICTS))
    if not numbers:
        return
    terminalreporter.section("acceptance criteria")
    for n in numbers:
        passed, detail = _VERDICTS.get(n, (False, "not run"))
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_collection_modifyitems(session, config, items):
    reporter = config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        reporter._acceptance_items = [i for i in items if i.get_closest_marker("criterion")]
