"""Source-normalized impact per paper (original Moed definition, 3-year window)."""

from __future__ import annotations

import csv
import io
import statistics
from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

from .corpus import Corpus, JournalRecord
from .errors import (
    ComputationError,
    DegenerateNormalizationError,
    UndefinedDCPError,
    UndefinedRIPError,
)

WINDOW = 3
SNIP_HEADER = ("journal", "year", "rip", "dcp", "rdcp", "snip")


@dataclass(frozen=True)
class SnipReport:
    journal: str
    year: int
    rip: float
    dcp: float
    rdcp: float
    snip: float
    cited_pub_count: int
    citing_paper_count: int


@dataclass(frozen=True)
class _YearInputs:
    window_pubs: Mapping[str, int]
    cites: Mapping[str, int]
    dcp_sum: Mapping[str, int]
    citing_count: Mapping[str, int]


def window_years(year: int) -> range:
    return range(year - WINDOW, year)


def _year_inputs(corpus: Corpus, year: int) -> _YearInputs:
    def build() -> _YearInputs:
        window = set(window_years(year))
        pubs: dict[str, int] = {}
        for (journal, y), ids in corpus.by_journal_year.items():
            if y in window:
                pubs[journal] = pubs.get(journal, 0) + len(ids)
        cites: dict[str, int] = defaultdict(int)
        dcp_sum: dict[str, int] = defaultdict(int)
        citing: dict[str, int] = defaultdict(int)
        arts = corpus.articles
        for citing_id in sorted(corpus.articles):
            paper = arts[citing_id]
            if paper.year != year:
                continue
            in_window = [r for r in (arts.get(ref) for ref in paper.references)
                         if r is not None and r.year in window]
            cited_journals = set()
            for ref in in_window:
                if ref.journal:
                    cites[ref.journal] += 1
                    cited_journals.add(ref.journal)
            for journal in cited_journals:
                citing[journal] += 1
                dcp_sum[journal] += len(in_window)
        return _YearInputs(pubs, dict(cites), dict(dcp_sum), dict(citing))

    return corpus.memo(("snip_inputs", year), build)


def _name(journal: JournalRecord | str) -> str:
    return journal.name if isinstance(journal, JournalRecord) else journal


def rip(journal: JournalRecord | str, year: int, corpus: Corpus) -> float:
    """Citations made in ``year`` to the journal's papers of the three prior years, per paper."""
    name = _name(journal)
    inputs = _year_inputs(corpus, year)
    pubs = inputs.window_pubs.get(name, 0)
    if pubs == 0:
        raise UndefinedRIPError(
            f"{name!r} has no publications in {year - WINDOW}..{year - 1}"
        )
    return inputs.cites.get(name, 0) / pubs


def dcp(journal: JournalRecord | str, year: int, corpus: Corpus) -> float:
    """Mean count of 1-3 year old references in the ``year`` papers citing the journal."""
    name = _name(journal)
    inputs = _year_inputs(corpus, year)
    n = inputs.citing_count.get(name, 0)
    if n == 0:
        raise UndefinedDCPError(f"no {year} paper cites {name!r}'s window publications")
    return inputs.dcp_sum[name] / n


def median_dcp(corpus: Corpus, year: int) -> float:
    inputs = _year_inputs(corpus, year)
    values = [inputs.dcp_sum[j] / n for j, n in sorted(inputs.citing_count.items()) if n]
    if not values:
        raise UndefinedDCPError(f"no journal has a defined DCP for {year}")
    return statistics.median(values)


def snip_from_parts(rip_value: float, dcp_value: float, median: float) -> tuple[float, float]:
    """(rdcp, snip) from raw impact, citation potential and the corpus median."""
    if median <= 0:
        raise DegenerateNormalizationError(f"median DCP is {median}")
    rdcp = dcp_value / median
    if rdcp <= 0:
        raise DegenerateNormalizationError("relative DCP is zero")
    return rdcp, rip_value / rdcp


def snip(journal: JournalRecord | str, year: int, corpus: Corpus) -> SnipReport:
    name = _name(journal)
    rip_value = rip(name, year, corpus)
    dcp_value = dcp(name, year, corpus)
    rdcp, value = snip_from_parts(rip_value, dcp_value, median_dcp(corpus, year))
    inputs = _year_inputs(corpus, year)
    return SnipReport(
        journal=name,
        year=year,
        rip=rip_value,
        dcp=dcp_value,
        rdcp=rdcp,
        snip=value,
        cited_pub_count=inputs.window_pubs[name],
        citing_paper_count=inputs.citing_count[name],
    )


def snip_table(
    corpus: Corpus, year: int, journals: Iterable[str] | None = None
) -> tuple[dict[str, SnipReport], dict[str, str]]:
    """SNIP for each journal, plus the reason for every journal left undefined.

    Raises only when not a single journal has a defined DCP in ``year``.
    """
    names = sorted(journals if journals is not None else corpus.journals)
    parts: dict[str, tuple[float, float]] = {}
    failures: dict[str, str] = {}
    for name in names:
        try:
            parts[name] = (rip(name, year, corpus), dcp(name, year, corpus))
        except ComputationError as exc:
            failures[name] = f"{type(exc).__name__}: {exc}"
    if not parts:
        rip_failures = sum(f.startswith("UndefinedRIPError") for f in failures.values())
        kind = UndefinedRIPError if rip_failures == len(failures) else UndefinedDCPError
        raise kind(
            f"SNIP undefined for every journal in {year} "
            f"({rip_failures} of {len(failures)} without window publications)"
        )
    median = median_dcp(corpus, year)
    inputs = _year_inputs(corpus, year)
    reports: dict[str, SnipReport] = {}
    for name, (rip_value, dcp_value) in parts.items():
        try:
            rdcp, value = snip_from_parts(rip_value, dcp_value, median)
        except ComputationError as exc:
            failures[name] = f"{type(exc).__name__}: {exc}"
            continue
        reports[name] = SnipReport(
            name, year, rip_value, dcp_value, rdcp, value,
            inputs.window_pubs[name], inputs.citing_count[name],
        )
    return reports, failures


def normalized_snip(reports: Mapping[str, SnipReport]) -> dict[str, float]:
    """SNIP divided by the largest SNIP in the set (all zeros if that maximum is 0)."""
    top = max((r.snip for r in reports.values()), default=0.0)
    if top <= 0:
        return {name: 0.0 for name in reports}
    return {name: r.snip / top for name, r in reports.items()}


def snip_csv(reports: Iterable[SnipReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SNIP_HEADER)
    for r in sorted(reports, key=lambda r: r.journal):
        writer.writerow([r.journal, r.year, repr(r.rip), repr(r.dcp), repr(r.rdcp), repr(r.snip)])
    return buf.getvalue()
