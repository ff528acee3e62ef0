import pathlib

import pytest

from roomsynth import default_fine_palette, default_house_palette, load_scene

DATA_DIR = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def house_palette():
    return default_house_palette()


@pytest.fixture(scope="session")
def fine_palette():
    return default_fine_palette()


@pytest.fixture(scope="session")
def example_scene():
    return load_scene(DATA_DIR / "house_example.json")


@pytest.fixture(scope="session")
def example_json_text():
    return (DATA_DIR / "house_example.json").read_text()
