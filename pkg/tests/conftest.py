import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"

_acceptance: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): numbered acceptance criterion")


@pytest.fixture
def configs_dir() -> Path:
    return CONFIGS


@pytest.fixture
def measured(request):
    """Dict whose entries are printed next to the criterion's pass/fail line."""
    values: dict = {}
    request.node.user_properties.append(("measured", values))
    return values


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not (report.when == "setup" and report.failed):
        return
    number, title = marker.args
    values = next((v for k, v in item.user_properties if k == "measured"), {})
    _acceptance[number] = {"title": title, "passed": report.passed, "values": values}


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_acceptance):
        entry = _acceptance[number]
        status = "PASS" if entry["passed"] else "FAIL"
        detail = ", ".join(f"{k}={_fmt(v)}" for k, v in entry["values"].items())
        tr.write_line(f"[{status}] {number:>2}. {entry['title']}" + (f"  ({detail})" if detail else ""))


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_fmt(x)}" for k, x in v.items()) + "}"
    return str(v)
