"""Regression and correlation checks used to validate computed metrics."""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DegenerateDesignError, UndefinedCorrelationError


@dataclass(frozen=True)
class FitResult:
    """A fitted 1-D model.

    Coefficient order: ``linear``/``svr`` -> (slope, intercept);
    ``polynomial`` -> highest power first; ``exponential`` -> (a, b) of
    ``a * exp(b * x)``.
    """

    kind: str
    coefficients: tuple[float, ...]
    r_squared: float
    rmse: float
    converged: bool = True
    iterations: int | None = None

    def predict(self, x: Sequence[float] | np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "exponential":
            a, b = self.coefficients
            return a * np.exp(b * x)
        return np.polyval(np.asarray(self.coefficients), x)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["coefficients"] = list(self.coefficients)
        return out


@dataclass(frozen=True)
class SvrConfig:
    epsilon: float = 0.7
    cost: float = 4.0
    max_iterations: int = 20_000
    tolerance: float = 1e-9

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.cost > 0:
            raise ValueError(f"cost must be positive, got {self.cost}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


def _pair(x, y, minimum: int = 2) -> tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(x, dtype=float).ravel()
    ya = np.asarray(y, dtype=float).ravel()
    if xa.shape != ya.shape:
        raise ValueError(f"x and y differ in length ({xa.size} vs {ya.size})")
    if xa.size < minimum:
        raise ValueError(f"need at least {minimum} points, got {xa.size}")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise ValueError("non-finite values in input")
    return xa, ya


def goodness(y: np.ndarray, predicted: np.ndarray) -> tuple[float, float]:
    """(R^2, RMSE). R^2 is 0 by convention when y has no variance."""
    resid = y - predicted
    ss_res = float(np.dot(resid, resid))
    centered = y - y.mean()
    ss_tot = float(np.dot(centered, centered))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return r2, math.sqrt(ss_res / y.size)


def _linear_coefficients(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    dx = x - x.mean()
    sxx = float(np.dot(dx, dx))
    if sxx == 0:
        raise DegenerateDesignError("x is constant; slope is undefined")
    slope = float(np.dot(dx, y - y.mean())) / sxx
    return slope, float(y.mean() - slope * x.mean())


def linear_fit(x, y) -> FitResult:
    xa, ya = _pair(x, y)
    slope, intercept = _linear_coefficients(xa, ya)
    r2, rmse = goodness(ya, slope * xa + intercept)
    return FitResult("linear", (slope, intercept), r2, rmse)


def poly_fit(x, y, degree: int) -> FitResult:
    """Least-squares polynomial via the normal equations on a centred, scaled abscissa."""
    if not 1 <= degree <= 5:
        raise ValueError(f"degree must be in 1..5, got {degree}")
    xa, ya = _pair(x, y, minimum=degree + 1)
    centre = float(xa.mean())
    scale = float(np.max(np.abs(xa - centre)))
    if scale == 0 or np.unique(xa).size <= degree:
        raise DegenerateDesignError(f"{np.unique(xa).size} distinct x values cannot fix degree {degree}")
    t = (xa - centre) / scale
    design = np.vander(t, degree + 1, increasing=True)
    normal = design.T @ design
    if np.linalg.matrix_rank(design) < degree + 1:
        raise DegenerateDesignError("design matrix is rank deficient")
    coef_t = np.linalg.solve(normal, design.T @ ya)  # LU with partial pivoting
    in_x = Polynomial(coef_t)(Polynomial([-centre / scale, 1.0 / scale]))
    coefs = np.zeros(degree + 1)
    coefs[: in_x.coef.size] = in_x.coef
    highest_first = tuple(float(c) for c in coefs[::-1])
    r2, rmse = goodness(ya, np.polyval(highest_first, xa))
    return FitResult("polynomial", highest_first, r2, rmse)


def _sse(x: np.ndarray, y: np.ndarray, a: float, b: float) -> float:
    r = y - a * np.exp(b * x)
    return float(np.dot(r, r))


def exp_fit(x, y) -> FitResult:
    """``y = a * exp(b x)``: log-linear least squares, then one Gauss-Newton step.

    The Gauss-Newton step is halved until it does not increase the squared
    error on the original scale. The constant fit (mean, 0) is kept instead
    if it is better still.
    """
    xa, ya = _pair(x, y)
    if np.any(ya <= 0):
        raise ValueError("exponential fit needs strictly positive y")
    b, log_a = _linear_coefficients(xa, np.log(ya))
    a = math.exp(log_a)
    base = _sse(xa, ya, a, b)
    e = np.exp(b * xa)
    jac = np.column_stack([e, a * xa * e])
    resid = ya - a * e
    try:
        step = np.linalg.solve(jac.T @ jac, jac.T @ resid)
    except np.linalg.LinAlgError:
        step = np.zeros(2)
    scale = 1.0
    while scale > 1e-6:
        ta, tb = a + scale * step[0], b + scale * step[1]
        if ta > 0 and _sse(xa, ya, ta, tb) <= base:
            a, b = ta, tb
            break
        scale /= 2
    # b = 0 is in the family; never return worse than the constant mean
    mean = float(ya.mean())
    if _sse(xa, ya, mean, 0.0) < _sse(xa, ya, a, b):
        a, b = mean, 0.0
    r2, rmse = goodness(ya, a * np.exp(b * xa))
    return FitResult("exponential", (float(a), float(b)), r2, rmse)


def svr_objective(x, y, slope: float, intercept: float, epsilon: float, cost: float) -> float:
    """``0.5 w^2 + C * sum(max(0, |y - (w x + b)| - eps))``."""
    xa, ya = np.asarray(x, float), np.asarray(y, float)
    excess = np.abs(ya - (slope * xa + intercept)) - epsilon
    return 0.5 * slope * slope + cost * float(np.sum(np.maximum(excess, 0.0)))


def svr_fit(x, y, config: SvrConfig | None = None) -> FitResult:
    """Linear epsilon-insensitive SVR solved in the primal by subgradient descent.

    Works on a standardized abscissa (an exact change of variables) starting
    from the least-squares line, with steps ``eta0 / sqrt(k)``. Every 500
    iterations the best objective so far is compared with the previous
    checkpoint; a relative gain under ``tolerance`` stops the descent.
    """
    config = config or SvrConfig()
    xa, ya = _pair(x, y)
    mx = float(xa.mean())
    sx = float(xa.std())
    if sx == 0:
        raise DegenerateDesignError("x is constant; slope is undefined")
    t = (xa - mx) / sx
    n = xa.size
    eps, cost = config.epsilon, config.cost
    slope0, intercept0 = _linear_coefficients(xa, ya)
    # v = w * sx, c = b + w * mx gives w x + b = v t + c
    v, c = slope0 * sx, intercept0 + slope0 * mx

    def objective(v: float, c: float) -> float:
        excess = np.abs(ya - (v * t + c)) - eps
        return (0.5 * (v / sx) ** 2) / (cost * n) + float(np.maximum(excess, 0.0).mean())

    eta0 = max(float(ya.std()), eps, 1e-12)
    best = (objective(v, c), v, c)
    checkpoint = best[0]
    converged = False
    iterations = 0
    for k in range(1, config.max_iterations + 1):
        iterations = k
        r = ya - (v * t + c)
        s = np.where(np.abs(r) > eps, np.sign(r), 0.0)
        gv = v / (sx * sx * cost * n) - float(np.dot(s, t)) / n
        gc = -float(s.mean())
        if gv == 0.0 and gc == 0.0:
            converged = True
            break
        eta = eta0 / math.sqrt(k)
        v -= eta * gv
        c -= eta * gc
        value = objective(v, c)
        if value < best[0]:
            best = (value, v, c)
        if k % 500 == 0:
            if checkpoint - best[0] <= config.tolerance * max(1.0, abs(best[0])):
                converged = True
                break
            checkpoint = best[0]
    _, v, c = best
    slope = v / sx
    intercept = c - slope * mx
    r2, rmse = goodness(ya, slope * xa + intercept)
    return FitResult("svr", (float(slope), float(intercept)), r2, rmse, converged, iterations)


def cross_correlation(x, y, max_lag: int) -> dict[int, float]:
    """Normalized cross-correlation ``r(k) = sum_t dx[t] dy[t+k] / (n sx sy)``.

    Positive lags pair x with later values of y. Uses the biased (divide by
    n) estimate, so every coefficient lies in [-1, 1].
    """
    xa, ya = _pair(x, y)
    n = xa.size
    if max_lag < 0 or n <= max_lag:
        raise ValueError(f"max_lag must be in [0, {n - 1}], got {max_lag}")
    dx, dy = xa - xa.mean(), ya - ya.mean()
    norm = math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy)))
    if norm == 0:
        raise UndefinedCorrelationError("a series has zero variance")
    out = {}
    for k in range(-max_lag, max_lag + 1):
        if k >= 0:
            s = float(np.dot(dx[: n - k], dy[k:]))
        else:
            s = float(np.dot(dx[-k:], dy[: n + k]))
        out[k] = min(1.0, max(-1.0, s / norm))
    return out


def pearson(x, y) -> float:
    return cross_correlation(x, y, 0)[0]


def fit_report_json(fits: Sequence[FitResult | dict], **extra) -> str:
    payload = {"fits": [f.to_dict() if isinstance(f, FitResult) else f for f in fits]}
    payload.update(extra)
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
