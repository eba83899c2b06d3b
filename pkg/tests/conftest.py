import pytest

# criterion id -> [title, all_passed, details]
_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(cid, title): end-to-end acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not (report.when == "call" or report.failed):
        return
    cid, title = marker.args
    entry = _RESULTS.setdefault(cid, [title, True, []])
    entry[1] = entry[1] and report.passed
    detail = dict(item.user_properties).get("detail")
    if detail and report.failed:
        entry[2] = [d for d in entry[2] if d.startswith("!")] + ["!" + detail]
    elif detail and not any(d.startswith("!") for d in entry[2]):
        entry[2] = [detail]  # passing runs keep only the latest summary


def _order(cid):
    head, _, tail = cid[1:].partition("-")
    return int(head), tail


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(_RESULTS, key=_order):
        title, ok, details = _RESULTS[cid]
        details = [d.lstrip("!") for d in details]
        line = f"{'PASS' if ok else 'FAIL'}  {cid:<5} {title}"
        if details:
            line += "  [" + "; ".join(details[:3]) + "]"
        tr.write_line(line)
