"""Shared fixtures and the acceptance summary printed at the end of a run."""

import math

import numpy as np
import pytest

from cvmagic import Cat, CubicPhase, GaussianPure, GkpEnvelope, Mixture

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def measured(request):
    """Attach measured values to an acceptance test; they are echoed in the summary."""
    notes = []
    request.node.user_properties.append(("measured", notes))
    return notes.append


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    notes = dict(report.user_properties).get("measured", [])
    _ACCEPTANCE[marker[0]] = (marker[1], report.outcome, notes)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep._criterion = m.args


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, outcome, notes = _ACCEPTANCE[n]
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"[{status}] {n:2d}. {title}"
        if notes:
            line += " | " + "; ".join(str(x) for x in notes)
        tr.write_line(line)


T_THETA = math.acos(1 / math.sqrt(3))


def state_panel():
    """Ten states spanning all four families plus a mixture."""
    return [
        GaussianPure(),
        GaussianPure(0.26, math.pi / 4),
        GaussianPure(-0.4, 1.1, 0.3, -0.2),
        GkpEnvelope(0.5),
        GkpEnvelope(0.3, T_THETA, math.pi / 4),
        Cat(1.1, 1.36),
        Cat(2.0, math.pi / 6, "odd"),
        CubicPhase(0.3, 0.0),
        CubicPhase(0.1, -0.5),
        Mixture(((0.5, GaussianPure()), (0.5, GaussianPure(1.0)))),
    ]


def symmetric_panel():
    """Twelve position-symmetric states."""
    return [
        GaussianPure(),
        GaussianPure(0.5),
        GaussianPure(-0.7, 0.4),
        GaussianPure(0.26, math.pi / 4),
        GkpEnvelope(0.5, math.pi / 4, math.pi / 4),
        GkpEnvelope(0.3, T_THETA, math.pi / 4),
        GkpEnvelope(0.8, 2.0, 1.0),
        GkpEnvelope(1.2, 0.5, 4.0),
        Cat(2.0, 0.0),
        Cat(2.0, math.pi / 6),
        Cat(1.3, 0.9, "odd"),
        Cat(0.7, 2.5, "odd"),
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
