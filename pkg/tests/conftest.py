import math

import pytest

from zpfsim.scenarios import make_matched_detector

WINDOW_1K = 2.0 * math.pi * 1000.0

# One (name, passed, detail) entry per acceptance criterion, printed in the
# terminal summary so the pass/fail lines survive output capturing.
_CRITERIA: list[tuple[str, bool, str]] = []


def record_criterion(name: str, passed: bool, detail: str = "") -> None:
    _CRITERIA.append((name, bool(passed), detail))
    assert passed, f"{name}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {name}"
        if detail:
            line += f" — {detail}"
        terminalreporter.write_line(line)


@pytest.fixture
def small_detector():
    """100-cell matched detector with a 5 sigma threshold."""
    return make_matched_detector(
        omega_center=1.0, window=WINDOW_1K, n_cells=100,
        threshold_sigma=5.0, zeta_sigma=0.01,
    )


def detector(n_cells=100, threshold_sigma=5.0, zeta_sigma=0.01, omega_center=1.0,
             window=WINDOW_1K, **kwargs):
    return make_matched_detector(
        omega_center=omega_center, window=window, n_cells=n_cells,
        threshold_sigma=threshold_sigma, zeta_sigma=zeta_sigma, **kwargs,
    )
