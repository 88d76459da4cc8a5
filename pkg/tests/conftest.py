from __future__ import annotations

import numpy as np
import pytest


def smooth_curve(rng, T=200, d=2, scale=1.0):
    """Random smooth open curve from a few Fourier modes."""
    t = np.linspace(0.0, 1.0, T)
    out = np.zeros((T, d))
    for k in range(1, 4):
        a = rng.normal(size=d) / k
        b = rng.normal(size=d) / k
        out += np.outer(np.sin(np.pi * k * t), a) + np.outer(np.cos(np.pi * k * t) - 1.0, b)
    out += np.outer(t, rng.normal(size=d))
    return scale * out


def random_warp(rng, T=200):
    """Smooth increasing map of [0, 1] onto itself with slopes in about [1/5, 5]."""
    t = np.linspace(0.0, 1.0, T)
    a = rng.uniform(-1.5, 1.5)
    g = t if abs(a) < 1e-9 else np.expm1(a * t) / np.expm1(a)
    k = int(rng.integers(1, 3))
    b = rng.uniform(-0.5, 0.5)
    g = g + b * np.sin(np.pi * k * g) / (np.pi * k)
    g[0], g[-1] = 0.0, 1.0
    return np.maximum.accumulate(g)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria report ---------------------------------------------------

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.fixture
def acceptance():
    """Recorder ``record(k, status, detail)``; status is a bool or a word."""

    def record(k, status, detail=""):
        if isinstance(status, (bool, np.bool_)):
            status = "PASS" if status else "FAIL"
        _ACCEPTANCE[k] = (status, detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {status:4s}  {detail}")
