import pytest

from latmet import landscape
from latmet.geometry import LatticeGeometry
from latmet.model import ModelParams


@pytest.fixture(scope="session")
def preset_4x3():
    return LatticeGeometry(4, 3), ModelParams("1", "9/10", "3/2")


@pytest.fixture(scope="session")
def space_4x3(preset_4x3):
    return landscape.StateSpace(*preset_4x3)


@pytest.fixture(scope="session")
def stab_4x3(space_4x3):
    return landscape.stability_levels(space_4x3)


@pytest.fixture(scope="session")
def part_4x3(space_4x3, stab_4x3):
    return landscape.partition(space_4x3, stab_4x3.gamma_star_scaled)


@pytest.fixture(scope="session")
def gate_4x3(space_4x3, part_4x3):
    return landscape.gate_analysis(space_4x3, part_4x3)


@pytest.fixture(scope="session")
def space_3x3():
    return landscape.StateSpace(LatticeGeometry(3, 3), ModelParams("1", "9/10", "3/2"))


@pytest.fixture(scope="session")
def preset_5x3():
    return LatticeGeometry(5, 3), ModelParams("1", "3/10", "6/5")


@pytest.fixture(scope="session")
def space_5x3(preset_5x3):
    return landscape.StateSpace(*preset_5x3)


@pytest.fixture(scope="session")
def stab_5x3(space_5x3):
    return landscape.stability_levels(space_5x3)


@pytest.fixture(scope="session")
def part_5x3(space_5x3, stab_5x3):
    return landscape.partition(space_5x3, stab_5x3.gamma_star_scaled)


@pytest.fixture(scope="session")
def gate_5x3(space_5x3, part_5x3):
    return landscape.gate_analysis(space_5x3, part_5x3)
