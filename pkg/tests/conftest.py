import warnings

import numpy as np
import pytest
from hypothesis import settings
from scipy.sparse.linalg import MatrixRankWarning

from dualma.geometry import Disk
from dualma.grid import build_grid

settings.register_profile("lab", max_examples=40, deadline=None)
settings.load_profile("lab")


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MatrixRankWarning)
        with np.errstate(all="ignore"):
            yield


@pytest.fixture(scope="session")
def disk33():
    return build_grid(Disk(1.0), 33)


@pytest.fixture(scope="session")
def disk65():
    return build_grid(Disk(1.0), 65)


@pytest.fixture(scope="session")
def disk129():
    return build_grid(Disk(1.0), 129)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: (int(s.split(":")[0].split()[1]), "INFO" in s)):
        terminalreporter.write_line(line)
