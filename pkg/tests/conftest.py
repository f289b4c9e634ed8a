"""Shared test fixtures."""

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_textured_frame(rng, height, width, low=0.15, high=0.85, smooth=1.5):
    """Smoothly textured RGB frame with values inside [low, high]."""
    from relitkit.core import gaussian_blur_sigma

    noise = rng.standard_normal((height, width))
    tex = gaussian_blur_sigma(
        np.clip((noise - noise.min()) / (np.ptp(noise) + 1e-12), 0, 1), smooth
    )
    tex = (tex - tex.min()) / (np.ptp(tex) + 1e-12)
    gray = low + (high - low) * tex
    return np.repeat(gray[:, :, None], 3, axis=2)


@pytest.fixture
def textured_frame(rng):
    return make_textured_frame(rng, 48, 64)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance check, even when everything passes."""
    results = {}
    for rep in terminalreporter.stats.get("passed", []):
        if "test_acceptance.py::" in rep.nodeid and rep.when == "call":
            results.setdefault(rep.nodeid.split("::")[-1], True)
    for status in ("failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance.py::" in rep.nodeid:
                results[rep.nodeid.split("::")[-1]] = False
    if not results:
        return
    terminalreporter.write_sep("-", "acceptance checks")
    for name in sorted(results):
        label = name.removeprefix("test_").replace("_", " ")
        verdict = "PASS" if results[name] else "FAIL"
        terminalreporter.write_line(f"[acceptance] {label}: {verdict}")
