"""Regime classification, predicted exponents and power-law fits for C1(h, eps)."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import optimize, stats
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .geometry import CurvatureClass

__all__ = [
    "Regime",
    "ScalingError",
    "TheoryExponents",
    "SweepRow",
    "CSV_COLUMNS",
    "PowerLawFit",
    "FitResult",
    "CrossoverReport",
    "classify_regime",
    "theory_exponents",
    "predicted_slope",
    "fit_power_law",
    "regime_crossover_report",
    "compare_to_theory",
    "rows_to_csv",
    "rows_from_csv",
]

CSV_COLUMNS = ("h", "epsilon", "C1", "source", "bc_mode", "patch", "regime", "residual", "wall_seconds")


class ScalingError(ValueError):
    pass


class Regime(str, enum.Enum):
    REGIME1 = "Regime1"
    REGIME2 = "Regime2"


def classify_regime(h: float, epsilon: float) -> Regime:
    """Regime1 for h <= eps <= sqrt(h) (boundary included), Regime2 for sqrt(h) < eps <= 1."""
    if not h > 0:
        raise ScalingError("h must be positive")
    if epsilon < h * (1 - 1e-12) or epsilon > 1 + 1e-12:
        raise ScalingError("epsilon outside [h, 1]")
    return Regime.REGIME1 if epsilon <= math.sqrt(h) * (1 + 1e-12) else Regime.REGIME2


@dataclass(frozen=True)
class TheoryExponents:
    """C1 ~ h^d_log_h * eps^d_log_eps."""

    d_log_h: Fraction
    d_log_eps: Fraction
    regime: Regime
    curvature_class: CurvatureClass


_TABLE = {
    CurvatureClass.ELLIPTIC: (Fraction(-1), Fraction(0)),
    CurvatureClass.HYPERBOLIC: (Fraction(-4, 3), Fraction(2, 3)),
    CurvatureClass.PARABOLIC: (Fraction(-3, 2), Fraction(1)),
}


def theory_exponents(curvature_class, regime) -> TheoryExponents:
    cls = CurvatureClass(curvature_class)
    regime = Regime(regime)
    if cls == CurvatureClass.MIXED:
        raise ScalingError("no scaling law for mixed-sign curvature")
    if regime == Regime.REGIME1:
        dh, de = Fraction(-2), Fraction(2)
    else:
        dh, de = _TABLE[cls]
    return TheoryExponents(dh, de, regime, cls)


def predicted_slope(exps: TheoryExponents, eps_power: Optional[float] = None) -> float:
    """Slope of log C1 against log(1/h) along a fixed-eps path or along eps = h^alpha."""
    slope = -float(exps.d_log_h)
    if eps_power is not None:
        slope -= eps_power * float(exps.d_log_eps)
    return slope


@dataclass
class SweepRow:
    h: float
    epsilon: float
    C1: float
    source: str = "solver"
    bc_mode: str = "dirichlet_thin_edge"
    patch: str = ""
    regime: str = ""
    residual: float = 0.0
    wall_seconds: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.C1 > 0:
            raise ScalingError("C1 must be positive")
        if not self.regime:
            self.regime = classify_regime(self.h, self.epsilon).value

    def csv_values(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: Sequence[SweepRow], header_lines: Iterable[str] = ()) -> str:
    """CSV text with '# '-prefixed header comments followed by the fixed column set."""
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(v) for v in r.csv_values()])
    return buf.getvalue()


def rows_from_csv(text: str) -> list:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ScalingError(f"unexpected CSV columns {reader.fieldnames}")
    rows = []
    for rec in reader:
        rows.append(SweepRow(float(rec["h"]), float(rec["epsilon"]), float(rec["C1"]), rec["source"],
                             rec["bc_mode"], rec["patch"], rec["regime"], float(rec["residual"]),
                             float(rec["wall_seconds"])))
    return rows


# ---------------------------------------------------------------------------
# power-law fits
# ---------------------------------------------------------------------------

@dataclass
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    slope_ci: tuple
    n_points: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["slope_ci"] = list(self.slope_ci)
        return d


def _linear_fit(x: np.ndarray, y: np.ndarray, level: float = 0.95) -> FitResult:
    res = stats.linregress(x, y)
    n = x.size
    if n > 2:
        half = stats.t.ppf(0.5 + level / 2, n - 2) * res.stderr
    else:
        half = math.inf
    r2 = res.rvalue ** 2 if np.ptp(y) > 0 else 1.0
    return FitResult(float(res.slope), float(res.intercept), float(r2),
                     (float(res.slope - half), float(res.slope + half)), int(n))


class PowerLawFit(RegressorMixin, BaseEstimator):
    """Least-squares fit of log C1 = intercept + slope * log(1/h).

    ``X`` holds thickness values h (one column), ``y`` the constants.
    """

    def __init__(self, level: float = 0.95):
        self.level = level

    def fit(self, X, y):
        X, y = check_X_y(np.reshape(np.asarray(X, dtype=float), (-1, 1)), y, y_numeric=True)
        if X.shape[0] < 2:
            raise ScalingError("need at least two points")
        if np.any(X <= 0) or np.any(y <= 0):
            raise ScalingError("power-law fits need positive data")
        res = _linear_fit(np.log(1.0 / X[:, 0]), np.log(y), self.level)
        self.slope_ = res.slope
        self.intercept_ = res.intercept
        self.r_squared_ = res.r_squared
        self.slope_ci_ = res.slope_ci
        self.n_points_ = res.n_points
        return self

    def predict(self, X):
        check_is_fitted(self, "slope_")
        X = check_array(np.reshape(np.asarray(X, dtype=float), (-1, 1)))
        return np.exp(self.intercept_) * (1.0 / X[:, 0]) ** self.slope_

    def result(self) -> FitResult:
        check_is_fitted(self, "slope_")
        return FitResult(self.slope_, self.intercept_, self.r_squared_, self.slope_ci_, self.n_points_)


def _on_path(rows, path):
    kind, value = path
    if kind == "fixed_eps":
        return [r for r in rows if abs(r.epsilon - value) <= 1e-9 * max(1.0, abs(value))]
    if kind == "eps_power":
        return [r for r in rows if abs(math.log(r.epsilon) - value * math.log(r.h)) <= 1e-9 * max(1.0, abs(math.log(r.h)))]
    raise ScalingError(f"unknown path kind {kind!r}")


def fit_power_law(rows: Sequence[SweepRow], path=("fixed_eps", 1.0), min_points: int = 4,
                  level: float = 0.95) -> FitResult:
    """Fit log C1 against log(1/h) for the rows on ``path``.

    ``path`` is ``('fixed_eps', eps0)`` or ``('eps_power', alpha)``.
    """
    selected = _on_path(list(rows), path)
    if len(selected) < min_points:
        raise ScalingError(f"need at least {min_points} rows on the path, got {len(selected)}")
    regimes = {classify_regime(r.h, r.epsilon) for r in selected}
    if len(regimes) > 1:
        raise ScalingError("rows on the path span both regimes")
    est = PowerLawFit(level=level).fit([r.h for r in selected], [r.C1 for r in selected])
    return est.result()


# ---------------------------------------------------------------------------
# crossover
# ---------------------------------------------------------------------------

@dataclass
class CrossoverReport:
    beta: float
    breakpoint_eps: float
    breakpoint_h: float
    slope_below: float
    slope_above: float
    variable: str
    sse: float

    def to_dict(self) -> dict:
        return asdict(self)


def _hinge_sse(x, y, xb):
    A = np.column_stack([np.ones_like(x), x, np.maximum(0.0, x - xb)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    return float(r @ r), coef


def regime_crossover_report(rows: Sequence[SweepRow], grid_points: int = 400) -> CrossoverReport:
    """Continuous two-segment fit of log C1 with the breakpoint located by grid search.

    Rows must share h (eps varies) or share eps (h varies), and include both regimes.
    """
    rows = list(rows)
    if len(rows) < 4:
        raise ScalingError("insufficient span: need at least four rows")
    regimes = {classify_regime(r.h, r.epsilon) for r in rows}
    if len(regimes) < 2:
        raise ScalingError("insufficient span: all rows lie in one regime")
    hs = np.array([r.h for r in rows])
    es = np.array([r.epsilon for r in rows])
    y = np.log([r.C1 for r in rows])
    if np.allclose(hs, hs[0], rtol=1e-12):
        x, variable = np.log(es), "epsilon"
    elif np.allclose(es, es[0], rtol=1e-12):
        x, variable = np.log(hs), "h"
    else:
        raise ScalingError("crossover needs a fixed-h or fixed-eps path")
    order = np.argsort(x)
    x, y = x[order], y[order]
    lo, hi = x[1], x[-2]
    if not hi > lo:
        raise ScalingError("insufficient span")
    candidates = np.linspace(lo, hi, grid_points)
    sse = [_hinge_sse(x, y, xb)[0] for xb in candidates]
    k = int(np.argmin(sse))
    a = candidates[max(k - 1, 0)]
    b = candidates[min(k + 1, grid_points - 1)]
    opt = optimize.minimize_scalar(lambda xb: _hinge_sse(x, y, xb)[0], bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-10})
    xb = float(opt.x) if opt.fun <= sse[k] else float(candidates[k])
    best, coef = _hinge_sse(x, y, xb)
    if variable == "epsilon":
        h = float(hs[0])
        eps_b = math.exp(xb)
        beta = math.log(eps_b) / math.log(h)
        h_b = h
    else:
        eps_b = float(es[0])
        h_b = math.exp(xb)
        beta = math.log(eps_b) / math.log(h_b)
    return CrossoverReport(beta, eps_b, h_b, float(coef[1]), float(coef[1] + coef[2]), variable, best)


def compare_to_theory(rows: Sequence[SweepRow], curvature_class, path=("fixed_eps", 1.0),
                      min_points: int = 3, eps0: Optional[float] = None) -> dict:
    """Fit along ``path`` and set the slope next to the predicted one."""
    selected = _on_path(list(rows), path)
    fit = fit_power_law(selected, path, min_points=min_points)
    regime = classify_regime(selected[0].h, selected[0].epsilon)
    exps = theory_exponents(curvature_class, regime)
    alpha = path[1] if path[0] == "eps_power" else None
    theory = predicted_slope(exps, alpha)
    report = {
        "path": [path[0], path[1]],
        "regime": regime.value,
        "curvature_class": CurvatureClass(curvature_class).value,
        "fit": fit.to_dict(),
        "theory_slope": theory,
        "theory_exponents": {"d_log_h": str(exps.d_log_h), "d_log_eps": str(exps.d_log_eps)},
        "slope_error": fit.slope - theory,
    }
    if eps0 is not None:
        report["eps_below_eps0"] = [r.epsilon < eps0 for r in selected]
    if exps.curvature_class == CurvatureClass.HYPERBOLIC and regime == Regime.REGIME2:
        report["note"] = "hyperbolic eps-exponent 2/3 used; an alternative statement with 4/3 is treated as a misprint"
    return report
