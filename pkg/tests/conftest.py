"""Shared fixtures"""

import numpy as np
import pytest

from forms.service import FormAssembler
from mesh.service import unit_square_mesh
from shared.config import get_settings
from space.service import build_mixed_space


@pytest.fixture(autouse=True)
def fresh_settings():
    """Settings are cached per process; drop the cache around every test."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def mesh2():
    return unit_square_mesh(2)


@pytest.fixture(scope="session")
def mesh4():
    return unit_square_mesh(4)


@pytest.fixture(scope="session")
def space2(mesh2):
    return build_mixed_space(mesh2)


@pytest.fixture(scope="session")
def space4(mesh4):
    return build_mixed_space(mesh4)


@pytest.fixture(scope="session")
def assembler2(space2):
    return FormAssembler(space2)


@pytest.fixture(scope="session")
def assembler4(space4):
    return FormAssembler(space4)
