"""Shared fixtures: a few fixed channel realizations reused across test files."""
import numpy as np
import pytest

from secjam import (PhysicalConstants, PowerLimits, TopologyConfig,
                    build_cfj_precoders, realize_channels)


@pytest.fixture(scope="session")
def constants():
    return PhysicalConstants()


@pytest.fixture(scope="session")
def limits():
    return PowerLimits()


@pytest.fixture(scope="session")
def channels_k3l3(constants):
    """One fixed K=3, L=3 realization with independently placed Eves."""
    return realize_channels(TopologyConfig(), constants, np.random.SeedSequence(42))


@pytest.fixture(scope="session")
def channels_near(constants):
    """Near-Bob Eve placement with strong correlation, for statistical models."""
    topo = TopologyConfig(eve_placement="near_bob", correlation=0.9)
    return realize_channels(topo, constants, np.random.SeedSequence(43))


@pytest.fixture(scope="session")
def cfj_k3l3(channels_k3l3):
    return build_cfj_precoders(channels_k3l3)
