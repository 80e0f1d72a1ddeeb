import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("pygesd", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("pygesd")

# criterion number -> (status, detail); status is PASS, FAIL or WARN
ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {status}  {detail}")
