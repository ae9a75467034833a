import numpy as np
import pytest

# CDF 9/7 analysis filters (bior4.4 taps). The high-pass sign is flipped to
# match the lifting convention H = d2 / zeta with a positive odd-sample tap.
CDF97_LO = np.array([
    0.03782845550726404, -0.023849465019556843, -0.11062440441843718,
    0.37740285561283066, 0.8526986790088938, 0.37740285561283066,
    -0.11062440441843718, -0.023849465019556843, 0.03782845550726404,
])
CDF97_HI = -np.array([
    -0.06453888262869706, 0.04068941760916406, 0.41809227322161724,
    -0.7884856164055829, 0.41809227322161724, 0.04068941760916406,
    -0.06453888262869706,
])


def convolve_97(x):
    """Reference 9/7 analysis by direct FIR filtering with symmetric extension."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    ext = np.concatenate([x[4:0:-1], x, x[n - 2 : n - 6 : -1]])
    low = np.array([CDF97_LO @ ext[2 * m : 2 * m + 9] for m in range(n // 2)])
    high = np.array([CDF97_HI @ ext[2 * m + 2 : 2 * m + 9] for m in range(n // 2)])
    return low, high


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record ``(number, passed, detail)`` for the end-of-run summary."""

    def record(number, passed, detail):
        _ACCEPTANCE[number] = (bool(passed), detail)
        print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
