"""Per-journal citation factors: self-citations / OCQ, NLIQ and international collaboration."""

from __future__ import annotations

import csv
import io
import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import lru_cache

from ._parallel import map_ordered, shards
from .corpus import UNKNOWN, Affiliation, Article, Corpus, CountryMap, JournalRecord, default_country_map

logger = logging.getLogger(__name__)

DEFAULT_ICR_MIX = 0.5

METRICS_HEADER = ("journal", "total_cites", "self_cites", "ocq", "icr", "snip", "snip_norm", "nliq")


@lru_cache(maxsize=1)
def _builtin_map() -> CountryMap:
    return default_country_map()


@dataclass(frozen=True)
class CitationTally:
    """Citation counts for every journal, gathered in a single pass over the corpus.

    ``inbound`` and ``self_cites`` are keyed by the cited journal,
    ``internal_out`` (B) and ``external_out`` (A) by the citing journal.
    """

    inbound: Counter
    self_cites: Counter
    internal_out: Counter
    external_out: Counter

    def merge(self, other: CitationTally) -> CitationTally:
        return CitationTally(
            self.inbound + other.inbound,
            self.self_cites + other.self_cites,
            self.internal_out + other.internal_out,
            self.external_out + other.external_out,
        )


def _author_keys(corpus: Corpus) -> dict[str, frozenset[str]]:
    return corpus.memo("author_keys", lambda: {a.id: a.author_keys for a in corpus.articles.values()})


def _tally_slice(corpus: Corpus, ids: Sequence[str]) -> CitationTally:
    keys = _author_keys(corpus)
    arts = corpus.articles
    inbound: Counter = Counter()
    selfc: Counter = Counter()
    internal: Counter = Counter()
    external: Counter = Counter()
    for cid in ids:
        citing = arts[cid]
        citing_keys = keys[cid]
        for ref in citing.references:
            cited = arts.get(ref)
            if cited is None or not cited.journal:
                continue
            inbound[cited.journal] += 1
            if citing_keys and not citing_keys.isdisjoint(keys[ref]):
                selfc[cited.journal] += 1
            if citing.journal:
                if citing.journal == cited.journal:
                    internal[citing.journal] += 1
                else:
                    external[citing.journal] += 1
    return CitationTally(inbound, selfc, internal, external)


def citation_tally(corpus: Corpus, jobs: int = 1) -> CitationTally:
    """All journals' inbound/self/internal/external counts (memoized per corpus)."""

    def build() -> CitationTally:
        ids = sorted(corpus.articles)
        parts = map_ordered(lambda s: _tally_slice(corpus, s), shards(ids, jobs), jobs)
        total = CitationTally(Counter(), Counter(), Counter(), Counter())
        for part in parts:
            total = total.merge(part)
        return total

    return corpus.memo("citation_tally", build)


def _name(journal: JournalRecord | str) -> str:
    return journal.name if isinstance(journal, JournalRecord) else journal


def self_citation_count(journal: JournalRecord | str, corpus: Corpus) -> int:
    """Inbound citations to the journal whose citing and cited papers share an author."""
    return citation_tally(corpus).self_cites[corpus.require_journal(journal).name]


def total_citations(journal: JournalRecord | str, corpus: Corpus) -> int:
    return citation_tally(corpus).inbound[corpus.require_journal(journal).name]


def other_citation_quotient(self_cites: int, total: int) -> float:
    if self_cites < 0 or total < 0:
        raise ValueError("citation counts must be non-negative")
    if self_cites > total:
        raise ValueError(f"self-citations ({self_cites}) exceed total citations ({total})")
    if total == 0:
        return 1.0
    return 1.0 - self_cites / total


def nliq_counts(journal: JournalRecord | str, corpus: Corpus) -> tuple[int, int]:
    """(A, B): outbound references to other journals and to the same journal."""
    name = corpus.require_journal(journal).name
    tally = citation_tally(corpus)
    return tally.external_out[name], tally.internal_out[name]


def nliq_from_counts(external: int, internal: int) -> float:
    denom = external + internal
    return external / denom if denom else 0.0


def nliq(journal: JournalRecord | str, corpus: Corpus) -> float:
    """Non-local influence quotient A / (A + B); 0 for a journal that cites nothing resolvable."""
    return nliq_from_counts(*nliq_counts(journal, corpus))


# ---------------------------------------------------------------------------
# International collaboration
# ---------------------------------------------------------------------------


def article_collab_weight(article: Article | None, affs: Sequence[Affiliation]) -> float | None:
    """Country-diversity weight of one article from its authors' primary affiliations.

    With ``n`` authors of known country and ``d`` distinct countries the
    weight is 0 when d == 1, 1 when d == n, and ``1 - m/n`` otherwise, where
    ``m`` is the largest same-country group. Returns None when no author has
    a known country (the article is not scorable).
    """
    countries = [a.country for a in affs if a.rank == 1 and a.country != UNKNOWN]
    n = len(countries)
    if n == 0:
        return None
    groups = Counter(countries)
    d = len(groups)
    if d == 1:
        return 0.0
    if d == n:
        return 1.0
    return 1.0 - max(groups.values()) / n


@dataclass(frozen=True)
class CollaborationParts:
    foreign_entries: int
    entries: int
    weights: tuple[float, ...]

    @property
    def x(self) -> float:
        return self.foreign_entries / self.entries if self.entries else 0.0

    @property
    def y(self) -> float:
        return sum(self.weights) / len(self.weights) if self.weights else 0.0

    @property
    def scorable(self) -> int:
        return len(self.weights)

    def ratio(self, mix: float) -> float:
        if not 0.0 <= mix <= 1.0:
            raise ValueError(f"collaboration mix must lie in [0, 1], got {mix}")
        if not self.weights:
            return 0.0
        return mix * self.x + (1.0 - mix) * self.y


def collaboration_parts(
    journal: JournalRecord | str,
    corpus: Corpus,
    cmap: CountryMap | None = None,
    diagnostics: Counter | None = None,
) -> CollaborationParts:
    """The author/country 0-1 matrix tally and per-article weights of a journal."""
    record = corpus.require_journal(journal)
    cmap = cmap if cmap is not None else _builtin_map()
    foreign = entries = 0
    weights: list[float] = []
    for art_id in record.article_ids:
        article = corpus.articles[art_id]
        affs = article.primary_affiliations(cmap, diagnostics)
        weight = article_collab_weight(article, affs)
        if weight is None:
            continue
        weights.append(weight)
        for aff in affs:
            if aff.country == UNKNOWN:
                continue
            entries += 1
            # an UNKNOWN journal country matches no author
            if aff.country != record.country:
                foreign += 1
    return CollaborationParts(foreign, entries, tuple(weights))


def intl_collab_ratio(
    journal: JournalRecord | str,
    corpus: Corpus,
    mix: float = DEFAULT_ICR_MIX,
    cmap: CountryMap | None = None,
    diagnostics: Counter | None = None,
) -> float:
    """``mix * x + (1 - mix) * y`` over the journal's scorable articles.

    ``x`` is the share of (author, article) entries whose country differs from
    the journal's, ``y`` the mean article weight. A journal with no scorable
    article gets 0 and a ``no_scorable_articles`` diagnostic.
    """
    parts = collaboration_parts(journal, corpus, cmap, diagnostics)
    if not parts.scorable:
        logger.debug("journal %r has no scorable articles", _name(journal))
        if diagnostics is not None:
            diagnostics["no_scorable_articles"] += 1
    return parts.ratio(mix)


# ---------------------------------------------------------------------------
# Table
# ---------------------------------------------------------------------------


@dataclass
class JournalMetrics:
    journal: str
    total_citations: int
    self_citations: int
    ocq: float
    icr: float
    nliq: float
    internal_out: int
    external_out: int
    snip: float | None = None
    snip_norm: float = 0.0
    flags: list[str] = field(default_factory=list)


def compute_journal_metrics(
    corpus: Corpus,
    mix: float = DEFAULT_ICR_MIX,
    cmap: CountryMap | None = None,
    jobs: int = 1,
    diagnostics: Counter | None = None,
) -> list[JournalMetrics]:
    """x1, x2 and x4 (plus raw counts) for every journal, sorted by name."""
    tally = citation_tally(corpus, jobs)
    cmap = cmap if cmap is not None else _builtin_map()
    names = sorted(corpus.journals)

    def one(name: str) -> tuple[JournalMetrics, Counter]:
        local: Counter = Counter()
        parts = collaboration_parts(name, corpus, cmap, local)
        a, b = tally.external_out[name], tally.internal_out[name]
        row = JournalMetrics(
            journal=name,
            total_citations=tally.inbound[name],
            self_citations=tally.self_cites[name],
            ocq=other_citation_quotient(tally.self_cites[name], tally.inbound[name]),
            icr=parts.ratio(mix),
            nliq=nliq_from_counts(a, b),
            internal_out=b,
            external_out=a,
        )
        if not parts.scorable:
            row.flags.append("no_scorable_articles")
            local["no_scorable_articles"] += 1
        return row, local

    rows = []
    for row, local in map_ordered(one, names, jobs):
        rows.append(row)
        if diagnostics is not None:
            diagnostics.update(local)
    return rows


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def metrics_csv(rows: Iterable[JournalMetrics]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRICS_HEADER)
    for r in rows:
        writer.writerow(
            [r.journal, r.total_citations, r.self_citations, _fmt(r.ocq), _fmt(r.icr),
             _fmt(r.snip), _fmt(r.snip_norm if r.snip is not None else None), _fmt(r.nliq)]
        )
    return buf.getvalue()
