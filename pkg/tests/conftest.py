from pathlib import Path

import pytest

from intlindex.corpus import default_country_map, parse_citation_db, parse_journal_countries

FIXTURES = Path(__file__).parent / "fixtures"
TOY6 = FIXTURES / "toy6.txt"
TOY6_COUNTRIES = FIXTURES / "toy6_countries.csv"


@pytest.fixture(scope="session")
def cmap():
    return default_country_map()


@pytest.fixture(scope="session")
def toy6(cmap):
    return parse_citation_db(TOY6, parse_journal_countries(TOY6_COUNTRIES, cmap))


@pytest.fixture
def dump(tmp_path):
    """Write dump text to a file and return its path."""

    def make(text: str, name: str = "dump.txt") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return make
