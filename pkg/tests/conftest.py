import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mool import load_program  # noqa: E402
from mool.corpus import default_manifest, load_manifest  # noqa: E402

CORPUS = default_manifest().parent


def corpus_program(eid: str):
    return load_program((CORPUS / f"{eid}.mool").read_text())


@pytest.fixture
def corpus():
    return corpus_program


def corpus_entries():
    return load_manifest(default_manifest())


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py::test_criterion_" in report.nodeid:
        _ACCEPTANCE[report.nodeid.rsplit("::", 1)[1]] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    from test_acceptance import CRITERIA
    terminalreporter.section("acceptance criteria")
    for name, label in CRITERIA.items():
        if name in _ACCEPTANCE:
            status = "PASS" if _ACCEPTANCE[name] == "passed" else "FAIL"
            terminalreporter.write_line(f"{status}  criterion {label}")
