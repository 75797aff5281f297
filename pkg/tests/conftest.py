"""Shared fixtures for the test suite."""

import pytest

from harmreg import preset_noise


@pytest.fixture(scope="session")
def seasonal():
    return preset_noise("seasonal")


@pytest.fixture(scope="session")
def smooth():
    return preset_noise("smooth")


@pytest.fixture(scope="session")
def mixed():
    return preset_noise("mixed")
