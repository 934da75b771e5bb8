import pytest
from hypothesis import HealthCheck, settings

from respclust.pipeline import AnalysisConfig, analyze
from respclust.synthgen import generate_preset

# First calls into numba kernels compile or load from cache, which makes
# per-example timing meaningless.
settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SEEDS = tuple(range(10))


@pytest.fixture(scope="session")
def panel():
    """Cached ``(matrix, analysis)`` per (preset, seed); data and analysis share the seed."""
    cache = {}

    def get(name, seed):
        if (name, seed) not in cache:
            m = generate_preset(name, seed)
            cache[name, seed] = (m, analyze(m, AnalysisConfig(seed=seed)))
        return cache[name, seed]

    return get


@pytest.fixture(scope="session")
def datasets():
    cache = {}

    def get(name, seed):
        if (name, seed) not in cache:
            cache[name, seed] = generate_preset(name, seed)
        return cache[name, seed]

    return get


# One summary line per acceptance criterion, from the tests marked
# ``@pytest.mark.acceptance(n)``; details come from ``record_property("detail", ...)``.
_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    detail = dict(report.user_properties).get("detail", "")
    _criteria.setdefault(mark.args[0], []).append((report.passed, item.name, detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        runs = _criteria[n]
        ok = all(r[0] for r in runs)
        names = ", ".join(r[1] for r in runs)
        detail = "; ".join(r[2] for r in runs if r[2])
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  [{names}]  {detail}")
