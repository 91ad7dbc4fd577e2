from pathlib import Path

import pytest

from verifact.corpus import Split, load_liar_new, load_liar_tsv

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def liar_dir() -> Path:
    return DATA / "liar"


@pytest.fixture(scope="session")
def liar_val(liar_dir):
    return load_liar_tsv(liar_dir / "valid.tsv", split=Split.VAL)


@pytest.fixture(scope="session")
def liar_test(liar_dir):
    return load_liar_tsv(liar_dir / "test.tsv", split=Split.TEST)


@pytest.fixture(scope="session")
def liar_new_path() -> Path:
    return DATA / "liar_new" / "liar_new.jsonl"


@pytest.fixture(scope="session")
def liar_new_en(liar_new_path):
    return [s for s in load_liar_new(liar_new_path)
            if s.language.value == "en"]


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return DATA / "fixtures"


@pytest.fixture(scope="session")
def refusal_bank() -> list[str]:
    text = (DATA / "refusal_texts.txt").read_text(encoding="utf-8")
    return [line for line in text.splitlines() if line]
