"""Citation-dump ingestion: records, cleansing, affiliations and the indexed corpus."""

from __future__ import annotations

import csv
import io
import json
import logging
import re
from collections import Counter, defaultdict
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Any, Callable, TypeVar

from .errors import ConfigError, DataError, FormatError

logger = logging.getLogger(__name__)

UNKNOWN = "UNKNOWN"

_WS = re.compile(r"\s+")
T = TypeVar("T")


def cleanse(raw: str | bytes) -> str:
    """Normalize a scraped or dumped string.

    Whitespace runs collapse to one space, the ends are trimmed and leading
    ``#`` id markers are dropped. Undecodable input is replaced with U+FFFD
    rather than rejected.
    """
    if isinstance(raw, (bytes, bytearray)):
        text = bytes(raw).decode("utf-8", "replace")
    else:
        text = raw.encode("utf-8", "surrogatepass").decode("utf-8", "replace")
    text = _WS.sub(" ", text).strip()
    return text.lstrip("# ")


def name_key(name: str) -> str:
    """Matching key for author names: exact after cleansing and case-folding."""
    return cleanse(name).casefold()


# ---------------------------------------------------------------------------
# Countries and affiliations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CountryMap:
    """Case-insensitive alias -> canonical country lookup."""

    aliases: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        folded = {cleanse(k).casefold(): v for k, v in self.aliases.items()}
        object.__setattr__(self, "aliases", MappingProxyType(folded))

    def lookup(self, token: str) -> str | None:
        return self.aliases.get(cleanse(token).casefold())

    @property
    def countries(self) -> frozenset[str]:
        return frozenset(self.aliases.values())

    def __len__(self) -> int:
        return len(self.aliases)


def _read_csv_rows(path: str | Path, header: tuple[str, ...]) -> list[list[str]]:
    try:
        text = Path(path).read_bytes().decode("utf-8-sig", "replace")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [row for row in csv.reader(io.StringIO(text)) if any(c.strip() for c in row)]
    if rows and tuple(c.strip().lower() for c in rows[0]) == header:
        rows = rows[1:]
    return rows


def country_map_from_rows(rows: Iterable[Sequence[str]]) -> CountryMap:
    aliases: dict[str, str] = {}
    shown: dict[str, str] = {}
    for lineno, row in enumerate(rows, 1):
        if len(row) < 2:
            raise ConfigError(f"country map row {lineno}: expected alias,canonical")
        alias, canonical = cleanse(row[0]), cleanse(row[1])
        if not alias or not canonical:
            raise ConfigError(f"country map row {lineno}: empty field")
        key = alias.casefold()
        if key in aliases and aliases[key] != canonical:
            raise ConfigError(
                f"alias {alias!r} maps to both {aliases[key]!r} and {canonical!r}"
            )
        aliases[key] = canonical
        shown[key] = alias
    # canonical names always resolve to themselves
    for canonical in set(aliases.values()):
        key = canonical.casefold()
        if key in aliases and aliases[key] != canonical:
            raise ConfigError(
                f"canonical {canonical!r} is also an alias of {aliases[key]!r}"
            )
        aliases.setdefault(key, canonical)
    return CountryMap(aliases)


def parse_country_map(path: str | Path) -> CountryMap:
    """Load an ``alias,canonical`` CSV. Conflicting duplicates are fatal."""
    return country_map_from_rows(_read_csv_rows(path, ("alias", "canonical")))


def default_country_map() -> CountryMap:
    """The alias table bundled with the package."""
    ref = resources.files("intlindex") / "data" / "country_aliases.csv"
    with resources.as_file(ref) as path:
        return parse_country_map(path)


@dataclass(frozen=True)
class Affiliation:
    author: str
    institution_raw: str
    country: str
    rank: int = 1


def parse_affiliation(
    author: str,
    raw: str,
    cmap: CountryMap,
    diagnostics: Counter | None = None,
    rank: int = 1,
) -> Affiliation:
    """Resolve the country of a postal-style affiliation string.

    Comma tokens are scanned right to left and the first one that is a known
    alias wins, so ``"..., Batavia, IL 60510, USA"`` resolves to the
    canonical form of ``USA``.
    """
    raw = cleanse(raw)
    country = UNKNOWN
    for token in reversed(raw.split(",")):
        hit = cmap.lookup(token)
        if hit is not None:
            country = hit
            break
    if country == UNKNOWN and diagnostics is not None:
        diagnostics["unknown_country"] += 1
    return Affiliation(author=cleanse(author), institution_raw=raw, country=country, rank=rank)


# ---------------------------------------------------------------------------
# Articles, journals, corpus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Article:
    id: str
    title: str = ""
    authors: tuple[str, ...] = ()
    year: int | None = None
    journal: str = ""
    references: tuple[str, ...] = ()
    affiliations: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        refs = tuple(dict.fromkeys(r for r in self.references if r))
        object.__setattr__(self, "references", refs)
        object.__setattr__(self, "authors", tuple(self.authors))
        if self.year is not None and self.year <= 0:
            object.__setattr__(self, "year", None)
        affs = {k: tuple(v) for k, v in dict(self.affiliations).items()}
        object.__setattr__(self, "affiliations", MappingProxyType(affs))

    @property
    def author_keys(self) -> frozenset[str]:
        return frozenset(name_key(a) for a in self.authors if a)

    def primary_affiliations(
        self, cmap: CountryMap, diagnostics: Counter | None = None
    ) -> list[Affiliation]:
        """First-listed affiliation of each author that has one, in author order.

        Authors are matched to ``#a`` lines by the same key as self-citations.
        """
        by_key = {name_key(k): v for k, v in self.affiliations.items()}
        out = []
        for author in self.authors:
            raws = by_key.get(name_key(author))
            if raws:
                out.append(parse_affiliation(author, raws[0], cmap, diagnostics))
        return out

    def to_json(self, journal_country: str | None = None) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "id": self.id,
            "title": self.title,
            "authors": list(self.authors),
            "year": self.year,
            "journal": self.journal,
            "references": list(self.references),
            "affiliations": {k: list(v) for k, v in self.affiliations.items()},
        }
        if journal_country is not None:
            obj["journal_country"] = journal_country
        return obj


@dataclass(frozen=True)
class JournalRecord:
    name: str
    country: str = UNKNOWN
    article_ids: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class Corpus:
    """Immutable, indexed citation database.

    Build with :meth:`from_articles`. Derived per-corpus tables (citation
    tallies, SNIP inputs) are memoized through :meth:`memo`; they never change
    what the corpus reports.
    """

    articles: Mapping[str, Article]
    journals: Mapping[str, JournalRecord]
    by_journal_year: Mapping[tuple[str, int], tuple[str, ...]]
    diagnostics: Mapping[str, int] = field(default_factory=dict)
    _memo: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_articles(
        cls,
        articles: Iterable[Article],
        journal_countries: Mapping[str, str] | None = None,
        diagnostics: Mapping[str, int] | None = None,
    ) -> Corpus:
        by_id: dict[str, Article] = {}
        for art in articles:
            if art.id in by_id:
                raise DataError(f"duplicate article id {art.id!r}")
            by_id[art.id] = art
        # canonical order: ids sorted, so equal corpora index identically
        by_id = {k: by_id[k] for k in sorted(by_id)}
        members: dict[str, list[str]] = defaultdict(list)
        by_jy: dict[tuple[str, int], list[str]] = defaultdict(list)
        for art in by_id.values():
            if art.journal:
                members[art.journal].append(art.id)
                if art.year is not None:
                    by_jy[(art.journal, art.year)].append(art.id)
        counts = Counter(diagnostics or {})
        counts["dangling_reference"] = sum(
            1 for a in by_id.values() for r in a.references if r not in by_id
        )
        counts["missing_journal"] = sum(1 for a in by_id.values() if not a.journal)
        countries = journal_countries or {}
        journals = {
            name: JournalRecord(name, countries.get(name, UNKNOWN), tuple(ids))
            for name, ids in sorted(members.items())
        }
        return cls(
            articles=MappingProxyType(by_id),
            journals=MappingProxyType(journals),
            by_journal_year=MappingProxyType({k: tuple(v) for k, v in by_jy.items()}),
            diagnostics=MappingProxyType(dict(sorted(counts.items()))),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return dict(self.articles) == dict(other.articles) and dict(self.journals) == dict(
            other.journals
        )

    __hash__ = object.__hash__

    def __len__(self) -> int:
        return len(self.articles)

    def memo(self, key: Any, build: Callable[[], T]) -> T:
        try:
            return self._memo[key]
        except KeyError:
            value = self._memo[key] = build()
            return value

    def resolve(self, article_id: str) -> Article | None:
        return self.articles.get(article_id)

    def journal_of(self, article_id: str) -> str:
        art = self.articles.get(article_id)
        return art.journal if art is not None else ""

    def require_journal(self, journal: JournalRecord | str) -> JournalRecord:
        name = journal.name if isinstance(journal, JournalRecord) else journal
        try:
            return self.journals[name]
        except KeyError:
            raise ValueError(f"unknown journal {name!r}") from None

    @property
    def years(self) -> list[int]:
        return sorted({a.year for a in self.articles.values() if a.year is not None})

    def with_journal_countries(self, journal_countries: Mapping[str, str]) -> Corpus:
        return Corpus.from_articles(
            self.articles.values(), journal_countries, self.diagnostics
        )


def list_journals(corpus: Corpus) -> list[JournalRecord]:
    """One record per distinct venue, sorted by name."""
    return [corpus.journals[name] for name in sorted(corpus.journals)]


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def _parse_year(text: str) -> int | None:
    text = cleanse(text)
    try:
        year = int(text)
    except ValueError:
        return None
    return year if year > 0 else None


def _iter_text_records(lines: Iterable[str]) -> Iterator[list[str]]:
    block: list[str] = []
    for line in lines:
        if line.strip():
            block.append(line.rstrip("\r\n"))
        elif block:
            yield block
            block = []
    if block:
        yield block


def _article_from_block(block: list[str], diag: Counter) -> Article | None:
    art_id = None
    title = ""
    authors: list[str] = []
    year: int | None = None
    venue = ""
    refs: list[str] = []
    affs: dict[str, list[str]] = {}
    for line in block:
        if line.startswith("#index"):
            art_id = cleanse(line[6:])
        elif line.startswith("#*"):
            title = cleanse(line[2:])
        elif line.startswith("#@"):
            authors = [a for a in (cleanse(p) for p in line[2:].split(";")) if a]
        elif line.startswith("#t"):
            year = _parse_year(line[2:])
            if year is None and cleanse(line[2:]):
                diag["bad_year"] += 1
        elif line.startswith("#c"):
            venue = cleanse(line[2:])
        elif line.startswith("#%"):
            ref = cleanse(line[2:])
            if ref:
                refs.append(ref)
        elif line.startswith("#a"):
            parts = line[2:].split("|")
            author = cleanse(parts[0])
            raws = [r for r in (cleanse(p) for p in parts[1:]) if r]
            if author and raws:
                affs.setdefault(author, []).extend(raws)
    if not art_id:
        return None
    return Article(art_id, title, tuple(authors), year, venue, tuple(refs), affs)


def _article_from_json(obj: Any) -> Article | None:
    if not isinstance(obj, dict) or not obj.get("id"):
        return None
    year = obj.get("year")
    if isinstance(year, str):
        year = _parse_year(year)
    elif not isinstance(year, int) or isinstance(year, bool):
        year = None
    affs = obj.get("affiliations") or {}
    if not isinstance(affs, dict):
        return None
    return Article(
        id=cleanse(str(obj["id"])),
        title=cleanse(str(obj.get("title") or "")),
        authors=tuple(a for a in (cleanse(str(x)) for x in obj.get("authors") or []) if a),
        year=year,
        journal=cleanse(str(obj.get("journal") or "")),
        references=tuple(cleanse(str(r)) for r in obj.get("references") or []),
        affiliations={
            cleanse(str(k)): tuple(cleanse(str(r)) for r in v if cleanse(str(r)))
            for k, v in affs.items()
        },
    )


def _looks_like_jsonl(path: Path, text: str) -> bool:
    if path.suffix.lower() in {".jsonl", ".ndjson", ".json"}:
        return True
    return text.lstrip().startswith("{")


def parse_citation_db(
    path: str | Path, journal_countries: Mapping[str, str] | None = None
) -> Corpus:
    """Parse an Aminer-style flat-text dump (or its JSON-lines export).

    Malformed records are skipped and tallied in ``corpus.diagnostics``.
    """
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8", "replace")
    except OSError as exc:
        raise DataError(f"cannot read citation dump {path}: {exc}") from exc

    diag: Counter = Counter()
    articles: dict[str, Article] = {}
    countries: dict[str, str] = {}
    if _looks_like_jsonl(path, text):
        for line in text.splitlines():
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                diag["malformed"] += 1
                continue
            art = _article_from_json(obj)
            if art is None or art.id in articles:
                diag["malformed" if art is None else "duplicate_id"] += 1
                continue
            articles[art.id] = art
            if isinstance(obj.get("journal_country"), str) and art.journal:
                countries.setdefault(art.journal, obj["journal_country"])
    else:
        for block in _iter_text_records(text.splitlines()):
            art = _article_from_block(block, diag)
            if art is None or art.id in articles:
                diag["malformed" if art is None else "duplicate_id"] += 1
                continue
            articles[art.id] = art

    if not articles:
        raise FormatError(f"{path}: no parseable records")
    diag["missing_year"] = sum(1 for a in articles.values() if a.year is None)
    if diag["malformed"] or diag["duplicate_id"]:
        logger.warning(
            "%s: skipped %d malformed and %d duplicate records",
            path, diag["malformed"], diag["duplicate_id"],
        )
    if journal_countries is not None:
        countries.update(journal_countries)
    return Corpus.from_articles(articles.values(), countries, diag)


def parse_journal_countries(
    path: str | Path, cmap: CountryMap, diagnostics: Counter | None = None
) -> dict[str, str]:
    """Read a ``journal_name,country`` CSV, canonicalizing country names."""
    out: dict[str, str] = {}
    for row in _read_csv_rows(path, ("journal_name", "country")):
        if len(row) < 2 or not cleanse(row[0]):
            raise DataError(f"{path}: malformed row {row!r}")
        country = cmap.lookup(row[1]) or UNKNOWN
        if country == UNKNOWN and diagnostics is not None:
            diagnostics["unknown_journal_country"] += 1
        out[cleanse(row[0])] = country
    return out


def export_jsonl(corpus: Corpus, stream: io.TextIOBase) -> None:
    """Write the normalized one-article-per-line export, ordered by id."""
    for art_id in sorted(corpus.articles):
        art = corpus.articles[art_id]
        country = corpus.journals[art.journal].country if art.journal else None
        stream.write(json.dumps(art.to_json(country), ensure_ascii=False, sort_keys=True))
        stream.write("\n")


def write_citation_dump(articles: Iterable[Article], stream: io.TextIOBase) -> None:
    """Serialize articles in the flat-text dump format."""
    for art in articles:
        stream.write(f"#index {art.id}\n")
        if art.title:
            stream.write(f"#*{art.title}\n")
        if art.authors:
            stream.write("#@" + ";".join(art.authors) + "\n")
        if art.year is not None:
            stream.write(f"#t{art.year}\n")
        if art.journal:
            stream.write(f"#c{art.journal}\n")
        for author, raws in art.affiliations.items():
            stream.write("#a" + "|".join((author, *raws)) + "\n")
        for ref in art.references:
            stream.write(f"#%{ref}\n")
        stream.write("\n")
