import math

import pytest

from bellratio.geometry import DetectionGeometry
from bellratio.qm_model import ExperimentConfig, Settings

REFERENCE_SETTINGS = Settings(a=0.0, a_prime=60.0, b=120.0, b_prime=60.0, r=0.0, s=0.0)


@pytest.fixture
def reference_config():
    return ExperimentConfig(
        eta=0.2,
        geometry=DetectionGeometry(theta=math.pi, phi=math.radians(30.0)),
        visibility=1.0,
        settings=REFERENCE_SETTINGS,
        pairs_per_setting=1_000_000,
        seed=42,
    )


def make_config(eta=0.2, phi_deg=30.0, visibility=1.0, settings=REFERENCE_SETTINGS, n=1000, seed=42):
    return ExperimentConfig(
        eta=eta,
        geometry=DetectionGeometry.from_degrees(180.0, phi_deg),
        visibility=visibility,
        settings=settings,
        pairs_per_setting=n,
        seed=seed,
    )


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
