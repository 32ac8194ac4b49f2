from __future__ import annotations

import numpy as np
import pytest

from splashwave import crapper
from splashwave.geometry import WaveCurve
from splashwave.solver import crapper_state
from splashwave.spectral import PeriodicGrid


@pytest.fixture(scope="session")
def geo():
    return crapper.critical_geometry()


@pytest.fixture(scope="session")
def splash_curve(geo):
    """Critical Crapper wave at N=1024 with the contact point moved to 0."""
    return WaveCurve.crapper(geo.A0, PeriodicGrid(1024), contact_at_origin=True)


@pytest.fixture(scope="session")
def crapper_curve():
    return WaveCurve.crapper(0.2, PeriodicGrid(512))


@pytest.fixture(scope="session")
def flat_curve():
    grid = PeriodicGrid(64)
    return WaveCurve.from_samples(grid.nodes.astype(complex))


@pytest.fixture(scope="session")
def state256():
    return crapper_state(256)


@pytest.fixture
def rng():
    return np.random.default_rng(20260415)
