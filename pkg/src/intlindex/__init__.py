"""Journal internationality indicators computed from a citation corpus."""

from .corpus import (
    UNKNOWN,
    Affiliation,
    Article,
    Corpus,
    CountryMap,
    JournalRecord,
    cleanse,
    default_country_map,
    list_journals,
    parse_affiliation,
    parse_citation_db,
    parse_country_map,
)
from .errors import ComputationError, DataError, IntlIndexError

__version__ = "0.1.0"
