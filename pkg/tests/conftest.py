import numpy as np
import pytest

from bccxai.core import AnnotationDataset, AnnotationRecord, PatternVector


def random_dataset(rng, max_images=12, max_raters=5, missing=0.4):
    """Random sparse annotation set; every image keeps at least one rater."""
    n_img = int(rng.integers(1, max_images + 1))
    n_rat = int(rng.integers(1, max_raters + 1))
    keep = rng.random((n_img, n_rat)) >= missing
    keep[np.arange(n_img), rng.integers(0, n_rat, n_img)] = True
    bits = rng.integers(0, 2, (n_img, n_rat, 7))
    recs = [
        AnnotationRecord(f"i{i}", f"r{j}", PatternVector(bits[i, j]))
        for i in range(n_img)
        for j in range(n_rat)
        if keep[i, j]
    ]
    return AnnotationDataset(tuple(recs))


@pytest.fixture
def rng():
    return np.random.default_rng(0)


_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if "acceptance" in report.keywords and (report.when == "call" or report.outcome != "passed"):
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
