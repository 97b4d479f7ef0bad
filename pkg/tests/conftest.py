import numpy as np
import pytest

import acceptance_log


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if acceptance_log.RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(acceptance_log.RESULTS):
            terminalreporter.write_line(acceptance_log.RESULTS[key])
