import textwrap

import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): end-to-end acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "detail": []})
    entry["ok"] &= rep.passed
    entry["detail"] += [v for k, v in item.user_properties if k == "measured"]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["ok"] else "FAIL"
        detail = "; ".join(dict.fromkeys(e["detail"]))
        terminalreporter.write_line(f"[{status}] criterion {number}: {e['title']}" + (f" ({detail})" if detail else ""))


@pytest.fixture
def write_config(tmp_path):
    """Write an INI config under ``tmp_path`` and return its path."""

    def _write(body: str, name: str = "run.ini"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(body))
        return path

    return _write
