import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

import numpy as np
import pytest

from locagen.dataset import from_observations, split
from locagen.evaluate import baseline_azimuths
from locagen.geometry import ArrayGeometry, Medium, SamplingSpec
from locagen.models import ForestParams, MlpParams, train_mlp, train_rf
from locagen.simulate import SimConfig, run_batch

# Shared full-scale fixtures: 24000 samples, 80/20 split, default seeds.
N_FULL = 24_000


def _full_split(fs):
    geo = ArrayGeometry.equilateral(0.1)
    cfg = SimConfig(geo, Medium(), SamplingSpec(fs))
    return split(from_observations(run_batch(cfg, N_FULL), geo), 0.8, 0)


@pytest.fixture(scope="session")
def full10():
    return _full_split(10_000.0)


@pytest.fixture(scope="session")
def full48():
    return _full_split(48_000.0)


@pytest.fixture(scope="session")
def rf10(full10):
    return train_rf(full10.train, ForestParams())


@pytest.fixture(scope="session")
def mlp10(full10):
    return train_mlp(full10.train, MlpParams())


@pytest.fixture(scope="session")
def mlp48(full48):
    return train_mlp(full48.train, MlpParams())


@pytest.fixture(scope="session")
def baseline10(full10):
    return baseline_azimuths(full10.validation, ArrayGeometry.equilateral(0.1), Medium())


# acceptance lines are collected here and echoed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    def emit(number, ok, text):
        ACCEPTANCE_LINES.append((number, f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {text}"))
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
