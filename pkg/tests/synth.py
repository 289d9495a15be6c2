"""Random citation dumps in the flat-text format, for property and oracle tests."""

from __future__ import annotations

import random
import zlib
from pathlib import Path

# (address, canonical country); the last entry never resolves
ADDRESSES = [
    ("Dept. of Physics, MIT, Cambridge, MA 02139, USA", "United States"),
    ("Fermilab, PO Box 500, Batavia, IL 60510, U.S.A.", "United States"),
    ("Max-Planck-Institute, D-69117 Heidelberg, Germany", "Germany"),
    ("CNRS, Paris, France", "France"),
    ("University of Tokyo, Kashiwa 277-8582, Japan", "Japan"),
    ("University of Edinburgh, Edinburgh EH9 3HJ, UK", "United Kingdom"),
    ("IIT Bombay, Mumbai 400076, India", "India"),
    ("Universidad de Chile, Santiago, Chile", "Chile"),
    ("Somewhere, Atlantis", None),
]

FIRST = ["Alice", "Bob", "Carol", "Dave", "Erin", "Frank", "Gina", "Hank", "Ivy", "Jun"]
LAST = ["Smith", "Jones", "White", "Brown", "Klein", "Mercier", "Vogel", "Sato", "Mori", "Rao"]


def _variant(rng: random.Random, name: str) -> str:
    """Same author, different spelling of case and spacing."""
    roll = rng.random()
    if roll < 0.1:
        return name.upper()
    if roll < 0.2:
        return name.replace(" ", "   ")
    if roll < 0.25:
        return " " + name.lower() + " "
    return name


def random_records(
    rng: random.Random,
    n_articles: int,
    n_journals: int = 4,
    years: tuple[int, int] = (2006, 2012),
    authors: int = 40,
    max_refs: int = 6,
    p_no_journal: float = 0.05,
    p_no_year: float = 0.03,
    p_dangling: float = 0.05,
) -> list[dict]:
    pool = [f"{rng.choice(FIRST)} {rng.choice(LAST)}" for _ in range(authors)]
    pool = sorted(set(pool))
    journals = [f"Journal {chr(65 + i)}" for i in range(n_journals)]
    homes = {name: rng.randrange(len(ADDRESSES)) for name in pool}
    records = []
    ids = [f"p{i}" for i in range(n_articles)]
    for i, art_id in enumerate(ids):
        k = rng.randint(1, 4)
        names = rng.sample(pool, min(k, len(pool)))
        year = None if rng.random() < p_no_year else rng.randint(*years)
        journal = "" if rng.random() < p_no_journal else rng.choice(journals)
        refs = rng.sample(ids, min(rng.randint(0, max_refs), n_articles))
        refs = [r for r in refs if r != art_id]
        if rng.random() < p_dangling:
            refs.append(f"missing{rng.randrange(1000)}")
        affs = {}
        for name in names:
            if rng.random() < 0.85:
                idx = homes[name] if rng.random() < 0.8 else rng.randrange(len(ADDRESSES))
                affs[name] = [ADDRESSES[idx][0]]
        records.append({
            "id": art_id,
            "title": f"Paper {i}",
            "authors": [_variant(rng, n) for n in names],
            "canonical_authors": names,
            "year": year,
            "journal": journal,
            "refs": refs,
            "affs": affs,
        })
    return records


def render(records: list[dict]) -> str:
    out = []
    for r in records:
        lines = [f"#index {r['id']}", f"#*{r['title']}"]
        if r["authors"]:
            lines.append("#@" + ";".join(r["authors"]))
        if r["year"] is not None:
            lines.append(f"#t{r['year']}")
        if r["journal"]:
            lines.append(f"#c{r['journal']}")
        for name, raws in r["affs"].items():
            lines.append("#a" + "|".join([name, *raws]))
        lines.extend(f"#%{ref}" for ref in r["refs"])
        out.append("\n".join(lines))
    return "\n\n".join(out) + "\n"


def journal_countries_csv(records: list[dict], rng: random.Random) -> str:
    names = sorted({r["journal"] for r in records if r["journal"]})
    countries = ["USA", "Germany", "Japan", "UK", "France", "Narnia"]
    rows = ["journal_name,country"] + [f"{n},{rng.choice(countries)}" for n in names]
    return "\n".join(rows) + "\n"


def write_corpus(tmp: Path, seed: int, n_articles: int, **kw) -> tuple[Path, Path]:
    rng = random.Random(seed)
    records = random_records(rng, n_articles, **kw)
    dump = tmp / f"corpus_{seed}.txt"
    dump.write_text(render(records), encoding="utf-8")
    countries = tmp / f"countries_{seed}.csv"
    countries.write_text(journal_countries_csv(records, rng), encoding="utf-8")
    return dump, countries


def large_dump(path: Path, n_articles: int, n_journals: int = 200, seed: int = 7) -> Path:
    """Fast writer for scale tests: citations point backwards in id order."""
    rng = random.Random(seed)
    journals = [f"Journal {i:03d}" for i in range(n_journals)]
    pool = [f"{f} {l}{i}" for i in range(50) for f in FIRST for l in LAST[:4]]
    with path.open("w", encoding="utf-8") as fh:
        for i in range(n_articles):
            names = rng.sample(pool, rng.randint(1, 4))
            fh.write(f"#index p{i}\n#*Paper {i}\n#@{';'.join(names)}\n")
            fh.write(f"#t{2000 + i * 13 // n_articles}\n#c{rng.choice(journals)}\n")
            for name in names:
                fh.write(f"#a{name}|{ADDRESSES[zlib.crc32(name.encode()) % len(ADDRESSES)][0]}\n")
            if i:
                for ref in {rng.randrange(max(0, i - 20000), i) for _ in range(rng.randint(0, 8))}:
                    fh.write(f"#%p{ref}\n")
            fh.write("\n")
    return path
