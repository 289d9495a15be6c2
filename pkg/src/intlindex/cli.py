"""Command-line front end: ingest -> metrics -> snip -> score -> network / regress.

Exit codes: 0 ok, 1 usage, 2 data error, 3 computation error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from collections import Counter
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .analytics import (
    FitResult,
    SvrConfig,
    cross_correlation,
    exp_fit,
    fit_report_json,
    linear_fit,
    poly_fit,
    svr_fit,
)
from .corpus import (
    Corpus,
    CountryMap,
    cleanse,
    default_country_map,
    export_jsonl,
    list_journals,
    parse_citation_db,
    parse_country_map,
    parse_journal_countries,
)
from .errors import ComputationError, DataError, IntlIndexError
from .metrics import DEFAULT_ICR_MIX, compute_journal_metrics, metrics_csv
from .model import (
    DEFAULT_BOUNDS,
    DEFAULT_DELTA,
    DEFAULT_STEP,
    ScoreConfig,
    Scoring,
    build_scoring,
    scores_csv,
)
from .network import (
    adjacency_csv,
    build_citation_graph,
    distribution_table,
    edges_csv,
    intra_csv,
    intra_journal_stats,
    to_dot,
)
from .snip import normalized_snip, snip_csv, snip_table

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger("intlindex")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_COMPUTE = 0, 1, 2, 3
COMMANDS = ("ingest", "metrics", "snip", "score", "network", "regress", "all")
MANIFEST = "manifest.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    corpus_path: Path
    out: Path
    country_map_path: Path | None = None
    journal_country_path: Path | None = None
    jis_path: Path | None = None
    pairs_path: Path | None = None
    snip_year: int | None = None
    alpha_bounds: tuple[float, float] = DEFAULT_BOUNDS
    alpha_step: float = DEFAULT_STEP
    alpha_delta: float = DEFAULT_DELTA
    elasticities: tuple[float, ...] | None = None
    scale_a: float = 1.0
    refine: bool = False
    icr_mix: float = DEFAULT_ICR_MIX
    yi_mix: float = 0.5
    degree: int = 2
    max_lag: int = 1
    svr_epsilon: float = 0.7
    svr_cost: float = 4.0
    figures: bool = True
    jobs: int = 1

    def validate(self, command: str) -> None:
        for label, p in (("corpus", self.corpus_path), ("country map", self.country_map_path),
                         ("journal countries", self.journal_country_path),
                         ("JIS file", self.jis_path), ("pairs file", self.pairs_path)):
            if p is not None and not p.is_file():
                raise DataError(f"{label} file not found: {p}")
        needs_year = command in {"snip", "score", "network", "all"} or (
            command == "regress" and self.pairs_path is None
        )
        if needs_year and self.snip_year is None:
            raise UsageError(f"'{command}' requires --snip-year")
        if self.snip_year is not None and self.snip_year <= 0:
            raise UsageError("--snip-year must be positive")
        lo, hi = self.alpha_bounds
        if not 0 < lo <= hi < 1:
            raise UsageError("--alpha-bounds must satisfy 0 < lo <= hi < 1")
        if not self.alpha_step > 0:
            raise UsageError("--alpha-step must be positive")
        if not 0 <= self.alpha_delta < 1:
            raise UsageError("--alpha-delta must lie in [0, 1)")
        if not 0 <= self.icr_mix <= 1:
            raise UsageError("--icr-mix must lie in [0, 1]")
        if not 0 < self.yi_mix < 1:
            raise UsageError("--yi-mix must lie strictly between 0 and 1")
        if not 1 <= self.degree <= 5:
            raise UsageError("--degree must be in 1..5")
        if self.max_lag < 0:
            raise UsageError("--max-lag must be non-negative")
        if self.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        if self.elasticities is not None and len(self.elasticities) != 4:
            raise UsageError("--elasticities takes four comma-separated values")

    def parameters(self) -> dict[str, Any]:
        """Settings that can change results (parallelism and output location cannot)."""
        skip = {"corpus_path", "out", "country_map_path", "journal_country_path",
                "jis_path", "pairs_path", "jobs"}
        out = {k: v for k, v in asdict(self).items() if k not in skip}
        return json.loads(json.dumps(out, default=str))


def _float_pair(text: str) -> tuple[float, float]:
    parts = [p for p in str(text).split(",") if p.strip()]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected lo,hi")
    return float(parts[0]), float(parts[1])


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in str(text).split(",") if p.strip())


_CONFIG_KEYS: dict[str, tuple[str, Any]] = {
    # config-file key -> (RunConfig field, converter)
    "corpus": ("corpus_path", Path),
    "country_map": ("country_map_path", Path),
    "journal_countries": ("journal_country_path", Path),
    "jis_file": ("jis_path", Path),
    "pairs": ("pairs_path", Path),
    "out": ("out", Path),
    "snip_year": ("snip_year", int),
    "alpha_bounds": ("alpha_bounds", lambda v: tuple(map(float, v)) if isinstance(v, list) else _float_pair(v)),
    "alpha_step": ("alpha_step", float),
    "alpha_delta": ("alpha_delta", float),
    "elasticities": ("elasticities", lambda v: tuple(map(float, v)) if isinstance(v, list) else _float_list(v)),
    "scale_a": ("scale_a", float),
    "refine": ("refine", bool),
    "icr_mix": ("icr_mix", float),
    "yi_mix": ("yi_mix", float),
    "degree": ("degree", int),
    "max_lag": ("max_lag", int),
    "svr_epsilon": ("svr_epsilon", float),
    "svr_cost": ("svr_cost", float),
    "figures": ("figures", bool),
    "jobs": ("jobs", int),
}


def _load_config_file(path: Path) -> dict[str, Any]:
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"invalid config file {path}: {exc}") from exc
    data = data.get("intlindex", data)
    out = {}
    for key, value in data.items():
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise UsageError(f"unknown config key {key!r} in {path}")
        name, conv = _CONFIG_KEYS[key]
        try:
            out[name] = conv(value)
        except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"bad value for {key!r}: {exc}") from exc
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    g = common.add_argument_group("inputs")
    g.add_argument("--config", type=Path, default=S, help="TOML file; flags override it")
    g.add_argument("--corpus", dest="corpus_path", type=Path, default=S,
                   help="citation dump (flat text or JSON lines)")
    g.add_argument("--country-map", dest="country_map_path", type=Path, default=S,
                   help="CSV alias,canonical (default: bundled table)")
    g.add_argument("--journal-countries", dest="journal_country_path", type=Path, default=S,
                   help="CSV journal_name,country")
    g.add_argument("--jis-file", dest="jis_path", type=Path, default=S, help="CSV journal,jis")
    g.add_argument("--pairs", dest="pairs_path", type=Path, default=S,
                   help="CSV x,y to regress instead of computed SNIP vs NLIQ")
    p = common.add_argument_group("parameters")
    p.add_argument("--snip-year", type=int, default=S, help="citing year; the window is the three years before it")
    p.add_argument("--alpha-bounds", type=_float_pair, default=S, metavar="LO,HI",
                   help="elasticity search box (default: 0.1,0.9)")
    p.add_argument("--alpha-step", type=float, default=S, help="grid spacing (default: 0.1)")
    p.add_argument("--alpha-delta", type=float, default=S, help="require sum(alpha) <= 1 - delta")
    p.add_argument("--elasticities", type=_float_list, default=S, metavar="A1,A2,A3,A4",
                   help="use fixed elasticities instead of fitting")
    p.add_argument("--scale-a", type=float, default=S, help="Cobb-Douglas constant A")
    p.add_argument("--refine", action="store_true", default=S,
                   help="polish the grid optimum by coordinate ascent")
    p.add_argument("--icr-mix", type=float, default=S, help="weight of the foreign-author share in ICR")
    p.add_argument("--yi-mix", type=float, default=S, help="weight of JIS when blending it with the score")
    p.add_argument("--degree", type=int, default=S, help="polynomial degree for regress")
    p.add_argument("--max-lag", type=int, default=S, help="largest cross-correlation lag")
    p.add_argument("--svr-epsilon", type=float, default=S, help="SVR tube half-width")
    p.add_argument("--svr-cost", type=float, default=S, help="SVR penalty on tube violations")
    o = common.add_argument_group("output")
    o.add_argument("--out", type=Path, default=S, help="output directory (default: out)")
    o.add_argument("--no-figures", dest="figures", action="store_false", default=S,
                   help="skip the PNG figures")
    o.add_argument("--jobs", type=int, default=S, help="worker threads")
    o.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr")

    parser = _Parser(prog="intlindex", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    helps = {
        "ingest": "normalize and validate the corpus",
        "metrics": "OCQ, ICR and NLIQ per journal",
        "snip": "SNIP reports for --snip-year",
        "score": "fit elasticities and score journals",
        "network": "inter-journal citation graph exports",
        "regress": "regression and cross-correlation reports",
        "all": "full pipeline",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values: dict[str, Any] = {"out": Path("out")}
    if getattr(args, "config", None) is not None:
        values.update(_load_config_file(args.config))
    for name in RunConfig.__dataclass_fields__:
        if hasattr(args, name):
            values[name] = getattr(args, name)
    if "corpus_path" not in values:
        raise UsageError("--corpus is required")
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class Run:
    """Single writer for every artifact of one invocation."""

    command: str
    config: RunConfig
    artifacts: list[dict[str, Any]] = field(default_factory=list)
    diagnostics: Counter = field(default_factory=Counter)
    notes: dict[str, Any] = field(default_factory=dict)

    def write(self, name: str, content: str | bytes) -> Path:
        data = content.encode("utf-8") if isinstance(content, str) else content
        path = self.config.out / name
        path.write_bytes(data)
        self._record(name, data)
        return path

    def record_file(self, name: str) -> None:
        self._record(name, (self.config.out / name).read_bytes())

    def _record(self, name: str, data: bytes) -> None:
        self.artifacts = [a for a in self.artifacts if a["path"] != name]
        self.artifacts.append({"path": name, "sha256": _sha256(data), "bytes": len(data)})

    def manifest(self) -> str:
        inputs = {}
        for label, p in (("corpus", self.config.corpus_path), ("country_map", self.config.country_map_path),
                         ("journal_countries", self.config.journal_country_path),
                         ("jis", self.config.jis_path), ("pairs", self.config.pairs_path)):
            if p is not None:
                inputs[label] = {"file": p.name, "sha256": _sha256(p.read_bytes())}
        payload = {
            "tool": "intlindex",
            "version": __version__,
            "command": self.command,
            "inputs": inputs,
            "parameters": self.config.parameters(),
            "artifacts": sorted(self.artifacts, key=lambda a: a["path"]),
            "diagnostics": dict(sorted(self.diagnostics.items())),
            "notes": self.notes,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _country_map(config: RunConfig) -> CountryMap:
    if config.country_map_path is not None:
        return parse_country_map(config.country_map_path)
    return default_country_map()


def _load_corpus(config: RunConfig, cmap: CountryMap, run: Run) -> Corpus:
    countries = None
    if config.journal_country_path is not None:
        countries = parse_journal_countries(config.journal_country_path, cmap, run.diagnostics)
    corpus = parse_citation_db(config.corpus_path, countries)
    for key, value in corpus.diagnostics.items():
        run.diagnostics[f"corpus.{key}"] += value
    return corpus


def _read_pairs(path: Path) -> tuple[list[float], list[float]]:
    xs, ys = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if len(row) < 2 or not any(c.strip() for c in row):
                continue
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                if not xs:  # header
                    continue
                raise DataError(f"{path}: non-numeric row {row!r}") from None
            xs.append(x)
            ys.append(y)
    return xs, ys


def _read_jis(path: Path) -> dict[str, float]:
    out = {}
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if len(row) < 2 or not row[0].strip():
                continue
            try:
                out[cleanse(row[0])] = float(row[1])
            except ValueError:
                if row[0].strip().lower() == "journal":
                    continue
                raise DataError(f"{path}: bad JIS row {row!r}") from None
    return out


def _journals_csv(corpus: Corpus) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("journal", "country", "articles"))
    for rec in list_journals(corpus):
        w.writerow((rec.name, rec.country, len(rec.article_ids)))
    return buf.getvalue()


def cmd_ingest(corpus: Corpus, run: Run) -> None:
    buf = io.StringIO()
    export_jsonl(corpus, buf)
    run.write("corpus.jsonl", buf.getvalue())
    run.write("journals.csv", _journals_csv(corpus))
    run.notes["articles"] = len(corpus)
    run.notes["journals"] = len(corpus.journals)


def cmd_metrics(corpus: Corpus, run: Run, cmap: CountryMap) -> None:
    cfg = run.config
    rows = compute_journal_metrics(corpus, cfg.icr_mix, cmap, cfg.jobs, run.diagnostics)
    if cfg.snip_year is not None:
        try:
            reports, failures = snip_table(corpus, cfg.snip_year)
        except ComputationError as exc:
            reports, failures = {}, {}
            run.notes["snip_error"] = str(exc)
        norm = normalized_snip(reports)
        for r in rows:
            if r.journal in reports:
                r.snip, r.snip_norm = reports[r.journal].snip, norm[r.journal]
        run.diagnostics["snip_undefined"] += len(failures)
    run.write("metrics.csv", metrics_csv(rows))


def cmd_snip(corpus: Corpus, run: Run) -> dict:
    reports, failures = snip_table(corpus, run.config.snip_year)
    run.write("snip.csv", snip_csv(reports.values()))
    run.notes["snip_undefined"] = dict(sorted(failures.items()))
    run.diagnostics["snip_undefined"] += len(failures)
    return reports


def _score_config(cfg: RunConfig, cmap: CountryMap) -> ScoreConfig:
    return ScoreConfig(
        snip_year=cfg.snip_year,
        icr_mix=cfg.icr_mix,
        elasticities=cfg.elasticities,
        bounds=cfg.alpha_bounds,
        step=cfg.alpha_step,
        delta=cfg.alpha_delta,
        A=cfg.scale_a,
        refine=cfg.refine,
        jis=_read_jis(cfg.jis_path) if cfg.jis_path else None,
        yi_mix=cfg.yi_mix,
        cmap=cmap,
        jobs=cfg.jobs,
    )


def cmd_score(corpus: Corpus, run: Run, cmap: CountryMap, write_metrics: bool = True) -> Scoring:
    cfg = run.config
    scoring = build_scoring(corpus, _score_config(cfg, cmap))
    run.diagnostics.update(scoring.diagnostics)
    run.write("scores.csv", scores_csv(scoring.rows))
    if write_metrics:
        run.write("metrics.csv", metrics_csv(scoring.metrics))
    fitted = cfg.elasticities is None
    run.write("model.json", scoring.model.to_json(
        fitted=fitted, bounds=list(cfg.alpha_bounds), step=cfg.alpha_step,
        delta=cfg.alpha_delta, refined=cfg.refine and fitted,
        factors=["ocq", "icr", "snip_norm", "nliq"],
    ))
    if cfg.figures:
        from .figures import elasticity_profile_figure

        features = [r.features for r in scoring.rows]
        elasticity_profile_figure(features, scoring.model, cfg.alpha_bounds, cfg.alpha_step,
                                  cfg.out / "elasticity_profile.png")
        run.record_file("elasticity_profile.png")
    return scoring


def cmd_network(corpus: Corpus, run: Run, snip_values: dict[str, float] | None = None) -> None:
    cfg = run.config
    if snip_values is None:
        reports, _ = snip_table(corpus, cfg.snip_year)
        snip_values = {k: r.snip for k, r in reports.items()}
    graph = build_citation_graph(corpus, snip_values, cfg.jobs)
    table = distribution_table(graph)
    run.write("edges.csv", edges_csv(graph))
    run.write("adjacency.csv", adjacency_csv(graph))
    run.write("adjacency_intra.csv", adjacency_csv(graph, intra=True))
    run.write("distribution.csv", table.to_csv())
    run.write("intra_journal.csv", intra_csv(intra_journal_stats(corpus)))
    run.write("network.dot", to_dot(graph))
    run.notes["network"] = {
        "nodes": len(graph.nodes), "edges": len(graph.edges), "median_snip": graph.median_snip,
        "excluded_journals": len(graph.excluded), "inter_journal_citations": table.total,
    }
    if table.empty:
        run.diagnostics["network.no_inter_journal_citations"] += 1


def _try_fit(name: str, fn, *args) -> FitResult | dict:
    try:
        return fn(*args)
    except (ComputationError, ValueError) as exc:
        return {"kind": name, "error": f"{type(exc).__name__}: {exc}"}


def cmd_regress(corpus: Corpus | None, run: Run, cmap: CountryMap | None = None,
                snip_values: dict[str, float] | None = None,
                nliq_values: dict[str, float] | None = None) -> None:
    cfg = run.config
    if cfg.pairs_path is not None:
        xs, ys = _read_pairs(cfg.pairs_path)
        source, xlabel, ylabel = "pairs", "x", "y"
    else:
        if snip_values is None or nliq_values is None:
            scoring = build_scoring(corpus, _score_config(cfg, cmap))
            snip_values = {k: r.snip for k, r in scoring.snip_reports.items()}
            nliq_values = {m.journal: m.nliq for m in scoring.metrics}
        # order journals by SNIP so lags run along the SNIP axis
        names = sorted(snip_values, key=lambda k: (snip_values[k], k))
        xs = [snip_values[k] for k in names]
        ys = [nliq_values[k] for k in names]
        source, xlabel, ylabel = "snip_vs_nliq", "SNIP", "NLIQ"

    fits = [
        _try_fit("linear", linear_fit, xs, ys),
        _try_fit("polynomial", poly_fit, xs, ys, cfg.degree),
        _try_fit("exponential", exp_fit, xs, ys),
        _try_fit("svr", svr_fit, xs, ys, SvrConfig(cfg.svr_epsilon, cfg.svr_cost)),
    ]
    try:
        xcorr: dict[int, float] | None = cross_correlation(xs, ys, cfg.max_lag)
        xcorr_out: Any = {str(k): v for k, v in xcorr.items()}
    except (ComputationError, ValueError) as exc:
        xcorr, xcorr_out = None, {"error": f"{type(exc).__name__}: {exc}"}
    run.write("fits.json", fit_report_json(fits, source=source, n=len(xs),
                                           cross_correlation=xcorr_out))
    good = [f for f in fits if isinstance(f, FitResult)]
    run.notes["fits_failed"] = [f["kind"] for f in fits if isinstance(f, dict)]
    if not good:
        raise ComputationError(f"no regression could be fitted on {len(xs)} points")
    if cfg.figures:
        from .figures import cross_correlation_figure, regression_figure

        regression_figure(xs, ys, good, cfg.out / "regression.png", xlabel, ylabel)
        run.record_file("regression.png")
        if xcorr is not None:
            cross_correlation_figure(xcorr, cfg.out / "cross_correlation.png")
            run.record_file("cross_correlation.png")


def cmd_all(corpus: Corpus, run: Run, cmap: CountryMap) -> None:
    cmd_ingest(corpus, run)
    scoring = cmd_score(corpus, run, cmap)
    run.write("snip.csv", snip_csv(scoring.snip_reports.values()))
    run.notes["snip_undefined"] = dict(sorted(scoring.snip_failures.items()))
    snip_values = {k: r.snip for k, r in scoring.snip_reports.items()}
    if snip_values:
        cmd_network(corpus, run, snip_values)
    else:
        run.notes["network"] = "skipped: no journal has a defined SNIP"
    nliq_values = {m.journal: m.nliq for m in scoring.metrics}
    try:
        cmd_regress(corpus, run, cmap, snip_values, nliq_values)
    except ComputationError as exc:
        run.notes["regress"] = f"skipped: {exc}"


def execute(command: str, config: RunConfig) -> Run:
    config.validate(command)
    config.out.mkdir(parents=True, exist_ok=True)
    run = Run(command, config)
    cmap = _country_map(config)
    if command == "regress" and config.pairs_path is not None:
        cmd_regress(None, run)
    else:
        corpus = _load_corpus(config, cmap, run)
        if command == "ingest":
            cmd_ingest(corpus, run)
        elif command == "metrics":
            cmd_metrics(corpus, run, cmap)
        elif command == "snip":
            cmd_snip(corpus, run)
        elif command == "score":
            cmd_score(corpus, run, cmap)
        elif command == "network":
            cmd_network(corpus, run)
        elif command == "regress":
            cmd_regress(corpus, run, cmap)
        else:
            cmd_all(corpus, run, cmap)
    (config.out / MANIFEST).write_text(run.manifest(), encoding="utf-8")
    return run


def _report_error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.WARNING - 10 * min(args.verbose, 2),
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        config = resolve_config(args)
        execute(args.command, config)
    except UsageError as exc:
        return _report_error("UsageError", str(exc), EXIT_USAGE)
    except IntlIndexError as exc:
        return _report_error(type(exc).__name__, str(exc), exc.exit_code)
    except ValueError as exc:
        return _report_error(type(exc).__name__, str(exc), EXIT_COMPUTE)
    except OSError as exc:
        return _report_error(type(exc).__name__, str(exc), EXIT_DATA)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
