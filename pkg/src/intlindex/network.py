"""Journal-level citation graph split at the median SNIP, with typed edges and exports."""

from __future__ import annotations

import csv
import io
import logging
import math
import statistics
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from ._parallel import map_ordered, shards
from .corpus import Corpus
from .errors import ComputationError
from .metrics import citation_tally

logger = logging.getLogger(__name__)

LOW, HIGH = "low", "high"
EDGE_TYPES = {(LOW, LOW): 1, (LOW, HIGH): 2, (HIGH, LOW): 3, (HIGH, HIGH): 4}
EDGE_HEADER = ("src", "dst", "weight", "display_weight", "type")


@dataclass(frozen=True)
class Node:
    snip: float
    size_class: str
    internal: int = 0


@dataclass(frozen=True)
class Edge:
    weight: int
    type: int

    @property
    def display_weight(self) -> float:
        return math.log10(1 + self.weight)


@dataclass(frozen=True)
class CitationGraph:
    nodes: Mapping[str, Node]
    edges: Mapping[tuple[str, str], Edge]
    median_snip: float
    excluded: tuple[str, ...] = ()

    def reversed(self) -> CitationGraph:
        flipped = {
            (dst, src): Edge(e.weight, EDGE_TYPES[(self.nodes[dst].size_class, self.nodes[src].size_class)])
            for (src, dst), e in self.edges.items()
        }
        return CitationGraph(self.nodes, dict(sorted(flipped.items())), self.median_snip, self.excluded)

    def out_weight(self, journal: str) -> int:
        return sum(e.weight for (src, _), e in self.edges.items() if src == journal)


def _edge_slice(corpus: Corpus, ids: Sequence[str], included: Mapping[str, Node]) -> tuple[Counter, Counter]:
    arts = corpus.articles
    pairs: Counter = Counter()
    internal: Counter = Counter()
    for cid in ids:
        src = arts[cid].journal
        if src not in included:
            continue
        for ref in arts[cid].references:
            cited = arts.get(ref)
            if cited is None or cited.journal not in included:
                continue
            if cited.journal == src:
                internal[src] += 1
            else:
                pairs[(src, cited.journal)] += 1
    return pairs, internal


def build_citation_graph(corpus: Corpus, snip_table: Mapping[str, float], jobs: int = 1) -> CitationGraph:
    """Directed journal graph over the journals that have a SNIP value.

    Journals at or above the median SNIP form the high group. Each resolvable
    reference between two distinct included journals adds one to that edge's
    weight; same-journal references only feed the node's ``internal`` count.
    """
    if not snip_table:
        raise ComputationError("cannot build a citation graph from an empty SNIP table")
    snips = {name: float(snip_table[name]) for name in sorted(snip_table) if name in corpus.journals}
    excluded = tuple(sorted(set(corpus.journals) - set(snips)))
    if excluded:
        logger.info("%d journals without SNIP excluded from the graph", len(excluded))
    if not snips:
        raise ComputationError("no journal in the SNIP table occurs in the corpus")
    median = statistics.median(snips.values())
    groups = {name: Node(s, HIGH if s >= median else LOW) for name, s in snips.items()}

    ids = sorted(corpus.articles)
    pairs: Counter = Counter()
    internal: Counter = Counter()
    for p, i in map_ordered(lambda s: _edge_slice(corpus, s, groups), shards(ids, jobs), jobs):
        pairs.update(p)
        internal.update(i)

    nodes = {name: Node(n.snip, n.size_class, internal[name]) for name, n in groups.items()}
    edges = {
        (src, dst): Edge(w, EDGE_TYPES[(nodes[src].size_class, nodes[dst].size_class)])
        for (src, dst), w in sorted(pairs.items())
    }
    return CitationGraph(nodes, edges, median, excluded)


@dataclass(frozen=True)
class DistributionTable:
    total: int
    counts: Mapping[int, int]
    percentages: Mapping[int, float]
    empty: bool = False

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("type", "label", "count", "percent"))
        labels = {1: "low->low", 2: "low->high", 3: "high->low", 4: "high->high"}
        for t in (1, 2, 3, 4):
            writer.writerow((t, labels[t], self.counts[t], repr(self.percentages[t])))
        writer.writerow(("all", "total", self.total, repr(100.0 if not self.empty else 0.0)))
        return buf.getvalue()


def distribution_table(graph: CitationGraph) -> DistributionTable:
    """Citation counts (summed edge weights) per edge type and their share of the total."""
    counts = {t: 0 for t in (1, 2, 3, 4)}
    for e in graph.edges.values():
        counts[e.type] += e.weight
    total = sum(counts.values())
    if total == 0:
        return DistributionTable(0, counts, {t: 0.0 for t in counts}, empty=True)
    return DistributionTable(total, counts, {t: 100.0 * c / total for t, c in counts.items()})


def default_ordering(graph: CitationGraph) -> list[str]:
    return sorted(graph.nodes)


def adjacency_matrix(graph: CitationGraph, ordering: Sequence[str] | None = None, intra: bool = False) -> np.ndarray:
    """Citation counts ``M[i, j]`` from ``ordering[i]`` to ``ordering[j]``.

    With ``intra`` the diagonal carries each journal's same-journal citations.
    """
    order = list(ordering) if ordering is not None else default_ordering(graph)
    if sorted(order) != sorted(graph.nodes) or len(set(order)) != len(order):
        raise ValueError("ordering must be a permutation of the graph's journals")
    index = {name: i for i, name in enumerate(order)}
    m = np.zeros((len(order), len(order)), dtype=np.int64)
    for (src, dst), e in graph.edges.items():
        m[index[src], index[dst]] = e.weight
    if intra:
        for name, node in graph.nodes.items():
            m[index[name], index[name]] = node.internal
    return m


@dataclass(frozen=True)
class IntraStats:
    internal: int
    external: int

    @property
    def internal_share(self) -> float:
        total = self.internal + self.external
        return self.internal / total if total else 0.0


def intra_journal_stats(corpus: Corpus) -> dict[str, IntraStats]:
    tally = citation_tally(corpus)
    return {
        name: IntraStats(tally.internal_out[name], tally.external_out[name])
        for name in sorted(corpus.journals)
    }


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------


def edges_csv(graph: CitationGraph) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EDGE_HEADER)
    for (src, dst), e in sorted(graph.edges.items()):
        writer.writerow((src, dst, e.weight, repr(e.display_weight), e.type))
    return buf.getvalue()


def adjacency_csv(graph: CitationGraph, ordering: Sequence[str] | None = None, intra: bool = False) -> str:
    order = list(ordering) if ordering is not None else default_ordering(graph)
    m = adjacency_matrix(graph, order, intra)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["", *order])
    for name, row in zip(order, m.tolist()):
        writer.writerow([name, *row])
    return buf.getvalue()


def intra_csv(stats: Mapping[str, IntraStats]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("journal", "internal", "external", "internal_share"))
    for name, s in sorted(stats.items()):
        writer.writerow((name, s.internal, s.external, repr(s.internal_share)))
    return buf.getvalue()


def _dot_id(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(graph: CitationGraph) -> str:
    lines = ["digraph citations {"]
    for name, node in sorted(graph.nodes.items()):
        lines.append(
            f"  {_dot_id(name)} [snip={node.snip!r}, group={node.size_class}, internal={node.internal}];"
        )
    for (src, dst), e in sorted(graph.edges.items()):
        lines.append(
            f"  {_dot_id(src)} -> {_dot_id(dst)} "
            f"[weight={e.weight}, penwidth={e.display_weight!r}, type={e.type}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
