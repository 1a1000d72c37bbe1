import math

import pytest

from ampsamp.signal_model import synth_bandlimited_noise

_ACCEPTANCE = []


def noise(seed, k_max, period_T=1.0, amp=1.0):
    """Bandlimited white noise with ``k_max`` harmonics per period."""
    return synth_bandlimited_noise(seed, 2 * math.pi * k_max / period_T, period_T, amp)


@pytest.fixture
def criterion():
    """Record a numbered acceptance result; the terminal summary prints one line per criterion."""

    def record(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}" + (f" -- {detail}" if detail else "")
        _ACCEPTANCE.append((number, line))
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
