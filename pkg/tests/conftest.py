from __future__ import annotations

import json
from pathlib import Path

import pytest

from medreview.knowledge import fixture_dir, load_knowledge
from medreview.patient import import_patient

TESTS_DIR = Path(__file__).parent


@pytest.fixture(scope="session")
def knowledge():
    return load_knowledge()


@pytest.fixture(scope="session")
def demo_document():
    return json.loads((fixture_dir() / "patients" / "demo.json").read_text(encoding="utf-8"))


@pytest.fixture
def demo_record(knowledge, demo_document):
    return import_patient(dict(demo_document), knowledge.drug_db, knowledge.terminology,
                          patient_id="demo")
