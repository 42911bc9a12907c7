import numpy as np
import pytest

from fstmmc.features import Episode, FeatureDataset

_criteria: dict[int, dict] = {}
_notes: dict[str, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "passed": True, "tests": [], "notes": []})
    if report.when == "call" or report.failed:
        entry["tests"].append(item.name)
        entry["notes"].extend(_notes.pop(item.nodeid, []))
        if not report.passed:
            entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "PASS" if entry["passed"] else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} {status}  {entry['title']} ({len(entry['tests'])} checks)")
        for text in entry["notes"]:
            terminalreporter.write_line(f"    {text}")


@pytest.fixture
def note(request):
    """Attach a measured value to the acceptance summary line of this test's criterion."""
    return lambda text: _notes.setdefault(request.node.nodeid, []).append(text)


def make_episode(support_x, support_y, query_x, query_y, n_way=None, k_shot=1, q_query=1):
    support_y = np.asarray(support_y)
    query_y = np.asarray(query_y)
    n_way = n_way if n_way is not None else int(max(support_y.max(), query_y.max()) + 1)
    return Episode(
        n_way=n_way,
        k_shot=k_shot,
        q_query=q_query,
        support_x=np.asarray(support_x, dtype=float),
        support_y=support_y,
        query_x=np.asarray(query_x, dtype=float),
        query_y=query_y,
        class_map=tuple(range(n_way)),
    )


@pytest.fixture
def small_dataset():
    rng = np.random.default_rng(7)
    labels = np.repeat(np.arange(6), 10)
    return FeatureDataset(tuple(f"c{i}" for i in range(6)), labels, rng.standard_normal((60, 4)))
