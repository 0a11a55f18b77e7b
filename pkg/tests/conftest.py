from __future__ import annotations

from pathlib import Path

import pytest

from tabverify.data_model import Dataset, Label, Statement, Table

DEMO = Path(__file__).resolve().parent.parent / "src" / "tabverify" / "data" / "demo"

E, R, N = Label.ENTAILED, Label.REFUTED, Label.NEUTRAL


@pytest.fixture
def demo_dir() -> Path:
    return DEMO


@pytest.fixture
def small() -> Dataset:
    t1 = Table("t1", "Scores", ("Model", "Acc", "F1"), (("A", "90", "0.8"), ("B", "85", "0.7")))
    t2 = Table("t2", "", ("Name", "Size"), (("x", "1"), ("y", "2"), ("z", "3")))
    return Dataset(
        [t1, t2],
        [
            Statement("s1", "t1", "A has an Acc of 90", E),
            Statement("s2", "t1", "B is better than A", R),
            Statement("s3", "t2", "z has size 3", E),
        ],
    )


# -- acceptance summary ----------------------------------------------------------

_ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion id and title")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = _ACCEPTANCE_MARKERS.get(report.nodeid)
    if marker is None:
        return
    num, title = marker
    prev = _ACCEPTANCE.get(num, (title, "PASS"))[1]
    status = "PASS" if report.passed and prev == "PASS" else "FAIL"
    _ACCEPTANCE[num] = (title, status)


_ACCEPTANCE_MARKERS: dict[str, tuple[str, str]] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _ACCEPTANCE_MARKERS[item.nodeid] = (str(m.args[0]), m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE, key=int):
        title, status = _ACCEPTANCE[num]
        terminalreporter.write_line(f"AC{num} {status}  {title}")
