import pytest

from tissuemaps import LayerKind, builtin_profiles


@pytest.fixture(scope="session")
def profiles():
    return builtin_profiles()


@pytest.fixture(scope="session")
def source_profile(profiles):
    return profiles[LayerKind.SOURCE]


@pytest.fixture(scope="session")
def tissue_profile(profiles):
    return profiles[LayerKind.TISSUE]


@pytest.fixture(scope="session")
def alteration_profile(profiles):
    return profiles[LayerKind.ALTERATION]
