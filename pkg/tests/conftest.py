from __future__ import annotations

import sys
from pathlib import Path

import pytest

from astrocity.model import read_document, write_document
from astrocity.recipe import load_recipe, run_recipe

ROOT = Path(__file__).resolve().parents[1]
RECIPES = ROOT / "recipes"
DEMOS = ("moon_south_pole", "moon_nearside", "mars")

sys.path.insert(0, str(Path(__file__).resolve().parent))


@pytest.fixture(scope="session")
def demo_docs():
    """Each demo recipe built once per session."""
    return {name: run_recipe(load_recipe(RECIPES / f"{name}.recipe")) for name in DEMOS}


@pytest.fixture(scope="session")
def demo_texts(demo_docs):
    return {name: write_document(doc) for name, doc in demo_docs.items()}


@pytest.fixture
def mars_doc(demo_texts):
    # fresh copy so tests may mutate it
    return read_document(demo_texts["mars"])
