import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    """Test-local generator, independent of the package's own streams."""
    return np.random.default_rng(20260815)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance criteria scoreboard at the end of every run."""
    acceptance = sys.modules.get("test_acceptance")
    records = getattr(acceptance, "RECORDS", None) if acceptance else None
    if records:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for line in records:
            terminalreporter.write_line("  " + line)
