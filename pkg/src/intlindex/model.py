"""Cobb-Douglas internationality score: evaluation, elasticity fitting, concavity and scoring."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from ._parallel import map_ordered, shards
from .corpus import Corpus, CountryMap
from .errors import ComputationError, ConfigError
from .metrics import DEFAULT_ICR_MIX, JournalMetrics, compute_journal_metrics
from .snip import SnipReport, normalized_snip, snip_table

logger = logging.getLogger(__name__)

DEFAULT_BOUNDS = (0.1, 0.9)
DEFAULT_STEP = 0.1
DEFAULT_DELTA = 0.01
SCORE_HEADER = ("rank", "journal", "x1", "x2", "x3", "x4", "jimi", "jis", "yi")

# relative gap under which two grid objectives count as tied
_TIE_RTOL = 1e-12
_SUM_ATOL = 1e-9


@dataclass(frozen=True)
class FeatureVector:
    x1: float  # other-citation quotient
    x2: float  # international collaboration ratio
    x3: float  # SNIP / max SNIP
    x4: float  # non-local influence quotient

    def __post_init__(self) -> None:
        for name, value in zip(("x1", "x2", "x3", "x4"), self.as_tuple()):
            if not 0.0 <= value <= 1.0 or math.isnan(value):
                raise ValueError(f"{name}={value} outside [0, 1]")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.x2, self.x3, self.x4)


@dataclass(frozen=True)
class CobbDouglasModel:
    """``y = A * prod(x_i ** alpha_i)``.

    Elasticities must be positive. The returns-to-scale constraint is not
    enforced here so that arbitrary vectors can be inspected with
    :func:`concavity_check`; :meth:`require_feasible` enforces it.
    """

    elasticities: tuple[float, ...]
    A: float = 1.0
    objective: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "elasticities", tuple(float(a) for a in self.elasticities))
        if not self.elasticities:
            raise ValueError("at least one elasticity is required")
        if any(not a > 0 for a in self.elasticities):
            raise ValueError(f"elasticities must be positive: {self.elasticities}")
        if not self.A > 0:
            raise ValueError(f"scale constant A must be positive, got {self.A}")

    @property
    def returns_to_scale(self) -> float:
        return math.fsum(self.elasticities)

    @property
    def constraint_slack(self) -> float:
        return 1.0 - self.returns_to_scale

    def require_feasible(self, strict: bool = False) -> None:
        s = self.returns_to_scale
        if s > 1.0 + _SUM_ATOL or (strict and s >= 1.0):
            bound = "< 1" if strict else "<= 1"
            raise ConfigError(f"sum of elasticities {s:.6g} violates {bound}")

    def __call__(self, features: FeatureVector | Sequence[float]) -> float:
        return cobb_douglas(features, self)

    def to_json(self, **extra) -> str:
        obj = {"A": self.A, "elasticities": list(self.elasticities),
               "returns_to_scale": self.returns_to_scale, "objective": self.objective}
        obj.update(extra)
        return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _values(features: FeatureVector | Sequence[float]) -> tuple[float, ...]:
    return features.as_tuple() if isinstance(features, FeatureVector) else tuple(features)


def cobb_douglas(features: FeatureVector | Sequence[float], model: CobbDouglasModel) -> float:
    xs = _values(features)
    if len(xs) != len(model.elasticities):
        raise ValueError(f"{len(xs)} factors for {len(model.elasticities)} elasticities")
    if any(x == 0 for x in xs):
        return 0.0
    return model.A * math.prod(x**a for x, a in zip(xs, model.elasticities))


# ---------------------------------------------------------------------------
# Elasticity fitting
# ---------------------------------------------------------------------------


def elasticity_grid(
    n: int, bounds: tuple[float, float], step: float, delta: float = DEFAULT_DELTA
) -> list[tuple[float, ...]]:
    """Feasible grid points in lexicographic order: each alpha_i on the lattice, sum <= 1 - delta."""
    lo, hi = bounds
    if not (0 < lo <= hi < 1):
        raise ConfigError(f"elasticity bounds must satisfy 0 < lo <= hi < 1, got {bounds}")
    if not step > 0:
        raise ConfigError(f"elasticity step must be positive, got {step}")
    if not 0 <= delta < 1:
        raise ConfigError(f"delta must lie in [0, 1), got {delta}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    axis = [round(lo + k * step, 12) for k in range(count)]
    cap = 1.0 - delta + _SUM_ATOL
    return [p for p in itertools.product(axis, repeat=n) if math.fsum(p) <= cap]


def _log_table(table: Sequence[FeatureVector | Sequence[float]]) -> tuple[np.ndarray, int]:
    rows = np.array([_values(f) for f in table], dtype=float)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ConfigError("feature table is empty")
    positive = rows[np.all(rows > 0, axis=1)]
    return np.log(positive), rows.shape[0]


def _mean_scores(logs: np.ndarray, total: int, grid: np.ndarray, A: float) -> np.ndarray:
    # Blocks of shape (points, rows); the row reduction runs along the contiguous
    # axis so each point's mean is independent of how the grid was sharded.
    out = np.empty(grid.shape[0])
    block = max(1, 2_000_000 // max(1, logs.shape[0]))
    for start in range(0, grid.shape[0], block):
        g = grid[start : start + block]
        expo = np.zeros((g.shape[0], logs.shape[0]))
        for i in range(g.shape[1]):
            expo += g[:, i, None] * logs[None, :, i]
        out[start : start + block] = A * np.exp(expo).sum(axis=1) / total
    return out


def _select(points: Sequence[tuple[float, ...]], scores: Sequence[float]) -> int:
    best = max(scores)
    tol = _TIE_RTOL * max(1.0, abs(best))
    tied = [i for i, s in enumerate(scores) if s >= best - tol]
    return min(tied, key=lambda i: (round(math.fsum(points[i]), 10), points[i]))


def mean_score(table: Sequence[FeatureVector | Sequence[float]], model: CobbDouglasModel) -> float:
    logs, total = _log_table(table)
    return float(_mean_scores(logs, total, np.array([model.elasticities]), model.A)[0])


def fit_elasticities(
    table: Sequence[FeatureVector | Sequence[float]],
    bounds: tuple[float, float] = DEFAULT_BOUNDS,
    step: float = DEFAULT_STEP,
    delta: float = DEFAULT_DELTA,
    A: float = 1.0,
    refine: bool = False,
    jobs: int = 1,
) -> CobbDouglasModel:
    """Grid-search the elasticities maximizing the mean score over ``table``.

    Ties go to the smallest sum of elasticities, then to the lexicographically
    smallest vector. With ``refine`` the grid winner is polished by projected
    coordinate ascent inside the same box and budget.
    """
    logs, total = _log_table(table)
    grid = elasticity_grid(logs.shape[1], bounds, step, delta)
    if not grid:
        raise ConfigError(
            f"no elasticity vector in {bounds} step {step} satisfies sum <= {1 - delta}"
        )
    points = np.array(grid)
    parts = map_ordered(lambda g: _mean_scores(logs, total, g, A), shards(points, jobs), jobs)
    scores = np.concatenate(parts).tolist()
    best = _select(grid, scores)
    alpha, objective = grid[best], scores[best]
    if refine:
        alpha, objective = _coordinate_ascent(logs, total, alpha, objective, bounds, delta, A, step)
    return CobbDouglasModel(alpha, A=A, objective=objective)


def _coordinate_ascent(logs, total, alpha, objective, bounds, delta, A, step, tol=1e-6):
    lo, hi = bounds
    cap = 1.0 - delta
    current = list(alpha)
    h = step / 2
    while h >= tol:
        improved = False
        for i in range(len(current)):
            for sign in (1.0, -1.0):
                trial = list(current)
                room = cap - (math.fsum(current) - current[i])
                trial[i] = min(max(current[i] + sign * h, lo), hi, room)
                if trial[i] == current[i]:
                    continue
                value = float(_mean_scores(logs, total, np.array([trial]), A)[0])
                if value > objective + tol:
                    current, objective, improved = trial, value, True
                    break
        if not improved:
            h /= 2
    return tuple(current), objective


# ---------------------------------------------------------------------------
# Concavity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConcavityReport:
    concave: bool
    returns_to_scale: float
    probe: tuple[float, ...]
    minors: Mapping[str, float] | None = None
    hessian_eigenvalues: tuple[float, ...] = ()


def hessian(model: CobbDouglasModel, point: Sequence[float]) -> np.ndarray:
    x = np.asarray(point, dtype=float)
    a = np.asarray(model.elasticities)
    f = cobb_douglas(tuple(x), model)
    h = f * np.outer(a, a) / np.outer(x, x)
    h[np.diag_indices_from(h)] -= f * a / x**2
    return h


def concavity_check(
    model: CobbDouglasModel | Sequence[float], probe: Sequence[float] | None = None
) -> ConcavityReport:
    """Concavity verdict from the elasticity conditions (non-negative, sum <= 1).

    For two factors the leading principal minors of the Hessian are also
    evaluated at ``probe`` (default: every coordinate 0.5).
    """
    if not isinstance(model, CobbDouglasModel):
        model = CobbDouglasModel(tuple(model))
    alphas = model.elasticities
    n = len(alphas)
    probe = tuple(probe) if probe is not None else (0.5,) * n
    s = model.returns_to_scale
    concave = all(a >= 0 for a in alphas) and s <= 1.0 + 1e-12
    minors = None
    if n == 2:
        a, b = alphas
        x1, x2 = probe
        k = model.A
        minors = {
            "M1": a * (a - 1) * k * x1 ** (a - 2) * x2**b,
            "M1_prime": b * (b - 1) * k * x1**a * x2 ** (b - 2),
            # determinant of the Hessian; scales with k squared
            "M2": k * k * a * b * x1 ** (2 * a - 2) * x2 ** (2 * b - 2) * (1 - (a + b)),
        }
    eig = tuple(float(v) for v in np.linalg.eigvalsh(hessian(model, probe)))
    return ConcavityReport(concave, s, probe, minors, eig)


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


def combine_scores(jis: float, jimi: float, mix: float) -> float:
    """Convex combination ``mix * jis + (1 - mix) * jimi``."""
    if not 0.0 < mix < 1.0:
        raise ValueError(f"mix must lie strictly between 0 and 1, got {mix}")
    return mix * jis + (1.0 - mix) * jimi


@dataclass(frozen=True)
class ScoreRow:
    journal: str
    features: FeatureVector
    jimi: float
    jis: float | None = None
    yi: float | None = None
    flags: tuple[str, ...] = ()


@dataclass
class ScoreConfig:
    snip_year: int
    icr_mix: float = DEFAULT_ICR_MIX
    elasticities: tuple[float, ...] | None = None
    bounds: tuple[float, float] = DEFAULT_BOUNDS
    step: float = DEFAULT_STEP
    delta: float = DEFAULT_DELTA
    A: float = 1.0
    refine: bool = False
    jis: Mapping[str, float] | None = None
    yi_mix: float = 0.5
    cmap: CountryMap | None = None
    jobs: int = 1


@dataclass
class Scoring:
    """Everything one scoring run derives from a corpus."""

    rows: list[ScoreRow]
    model: CobbDouglasModel
    metrics: list[JournalMetrics]
    snip_reports: dict[str, SnipReport]
    snip_failures: dict[str, str]
    diagnostics: Counter = field(default_factory=Counter)


def build_scoring(corpus: Corpus, config: ScoreConfig) -> Scoring:
    """Compute x1..x4 for every journal, fit (or take) elasticities and score."""
    diagnostics: Counter = Counter()
    metrics = compute_journal_metrics(corpus, config.icr_mix, config.cmap, config.jobs, diagnostics)
    try:
        reports, failures = snip_table(corpus, config.snip_year)
    except ComputationError as exc:
        logger.warning("SNIP undefined for all journals: %s", exc)
        reports, failures = {}, {m.journal: f"{type(exc).__name__}: {exc}" for m in metrics}
    norm = normalized_snip(reports)
    for m in metrics:
        if m.journal in reports:
            m.snip = reports[m.journal].snip
            m.snip_norm = norm[m.journal]
        else:
            m.snip, m.snip_norm = None, 0.0
            m.flags.append("snip_undefined")
            diagnostics["snip_undefined"] += 1

    features = [FeatureVector(m.ocq, m.icr, m.snip_norm, m.nliq) for m in metrics]
    if config.elasticities is not None:
        model = CobbDouglasModel(tuple(config.elasticities), A=config.A)
        model.require_feasible()
        model = CobbDouglasModel(model.elasticities, model.A, mean_score(features, model))
    else:
        model = fit_elasticities(
            features, config.bounds, config.step, config.delta, config.A,
            config.refine, config.jobs,
        )

    jis = config.jis or {}
    rows = []
    for m, fv in zip(metrics, features):
        jimi = cobb_douglas(fv, model)
        j = jis.get(m.journal)
        yi = combine_scores(j, jimi, config.yi_mix) if j is not None else None
        rows.append(ScoreRow(m.journal, fv, jimi, j, yi, tuple(m.flags)))
    rows.sort(key=lambda r: (-r.jimi, r.journal))
    return Scoring(rows, model, metrics, reports, failures, diagnostics)


def score_corpus(corpus: Corpus, config: ScoreConfig) -> list[ScoreRow]:
    """Score rows for every journal, highest internationality first."""
    return build_scoring(corpus, config).rows


def scores_csv(rows: Sequence[ScoreRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCORE_HEADER)
    for rank, r in enumerate(rows, 1):
        writer.writerow(
            [rank, r.journal, *(repr(v) for v in r.features.as_tuple()), repr(r.jimi),
             "" if r.jis is None else repr(r.jis), "" if r.yi is None else repr(r.yi)]
        )
    return buf.getvalue()
