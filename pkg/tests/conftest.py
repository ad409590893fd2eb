from pathlib import Path

import pytest

from mapsynth.catalog import load_catalog

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def mondial():
    return load_catalog(FIXTURES / "mondial-mini" / "catalog.json")


@pytest.fixture(scope="session")
def selfjoin():
    return load_catalog(FIXTURES / "selfjoin-mini" / "catalog.json")
