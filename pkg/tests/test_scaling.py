import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from kornshell.geometry import CurvatureClass
from kornshell.scaling import (CSV_COLUMNS, PowerLawFit, Regime, ScalingError, SweepRow, classify_regime,
                               compare_to_theory, fit_power_law, predicted_slope, regime_crossover_report,
                               rows_from_csv, rows_to_csv, theory_exponents)

HS = [2.0 ** -k for k in range(4, 10)]


def theory_formula(cls, regime, h, eps):
    """Direct evaluation of the scaling laws, used to cross-check the exponent table."""
    if regime is Regime.REGIME1:
        return eps ** 2 / h ** 2
    return {CurvatureClass.ELLIPTIC: 1 / h,
            CurvatureClass.HYPERBOLIC: eps ** (2 / 3) / h ** (4 / 3),
            CurvatureClass.PARABOLIC: eps / h ** 1.5}[cls]


class TestRegimes:
    def test_boundary_is_regime1(self):
        assert classify_regime(1e-4, 1e-2) is Regime.REGIME1

    def test_wide_is_regime2(self):
        assert classify_regime(1e-4, 0.5) is Regime.REGIME2

    def test_eps_below_h(self):
        with pytest.raises(ScalingError):
            classify_regime(1e-4, 1e-5)

    def test_eps_above_one(self):
        with pytest.raises(ScalingError):
            classify_regime(1e-4, 1.5)

    @settings(max_examples=100)
    @given(k=st.floats(1, 20), a=st.floats(0, 1), b=st.floats(0, 1))
    def test_monotone_in_eps(self, k, a, b):
        h = 2.0 ** -k
        e1, e2 = sorted((h ** a, h ** b))
        if classify_regime(h, e1) is Regime.REGIME2:
            assert classify_regime(h, e2) is Regime.REGIME2


class TestTheory:
    def test_table(self):
        e = theory_exponents(CurvatureClass.PARABOLIC, Regime.REGIME2)
        assert (e.d_log_h, e.d_log_eps) == (Fraction(-3, 2), Fraction(1))
        e = theory_exponents("elliptic", "Regime2")
        assert (e.d_log_h, e.d_log_eps) == (-1, 0)
        e = theory_exponents(CurvatureClass.HYPERBOLIC, Regime.REGIME1)
        assert (e.d_log_h, e.d_log_eps) == (-2, 2)
        e = theory_exponents(CurvatureClass.HYPERBOLIC, Regime.REGIME2)
        assert (e.d_log_h, e.d_log_eps) == (Fraction(-4, 3), Fraction(2, 3))

    def test_mixed_rejected(self):
        with pytest.raises(ScalingError):
            theory_exponents(CurvatureClass.MIXED, Regime.REGIME2)

    @pytest.mark.parametrize("cls", [CurvatureClass.ELLIPTIC, CurvatureClass.HYPERBOLIC, CurvatureClass.PARABOLIC])
    @pytest.mark.parametrize("regime", list(Regime))
    def test_table_matches_formula_derivatives(self, cls, regime):
        h, eps = (1e-4, 3e-3) if regime is Regime.REGIME1 else (1e-4, 0.3)
        d = 1e-6
        f = lambda lh, le: math.log(theory_formula(cls, regime, math.exp(lh), math.exp(le)))
        lh, le = math.log(h), math.log(eps)
        dh = (f(lh + d, le) - f(lh - d, le)) / (2 * d)
        de = (f(lh, le + d) - f(lh, le - d)) / (2 * d)
        exps = theory_exponents(cls, regime)
        # log-linear formulas: central differences are exact up to rounding
        assert dh == pytest.approx(float(exps.d_log_h), abs=1e-8)
        assert de == pytest.approx(float(exps.d_log_eps), abs=1e-8)

    def test_predicted_slope_on_power_path(self):
        e = theory_exponents(CurvatureClass.PARABOLIC, Regime.REGIME1)
        assert predicted_slope(e, 0.75) == pytest.approx(0.5)
        assert predicted_slope(theory_exponents("parabolic", "Regime2")) == pytest.approx(1.5)


class TestFits:
    def test_exact_inverse_square(self):
        rows = [SweepRow(h, 1.0, h ** -2) for h in HS]
        fit = fit_power_law(rows, ("fixed_eps", 1.0))
        assert fit.slope == pytest.approx(2.0, abs=1e-10)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_regime1_power_path(self):
        rows = [SweepRow(h, h ** 0.75, h ** 1.5 / h ** 2) for h in HS]
        fit = fit_power_law(rows, ("eps_power", 0.75))
        assert fit.slope == pytest.approx(0.5, abs=1e-10)

    def test_confidence_interval_contains_slope(self, rng):
        rows = [SweepRow(h, 1.0, h ** -1.5 * math.exp(0.05 * rng.normal())) for h in HS]
        fit = fit_power_law(rows)
        assert fit.slope_ci[0] < fit.slope < fit.slope_ci[1]
        assert fit.n_points == len(HS)

    def test_too_few_points(self):
        with pytest.raises(ScalingError):
            fit_power_law([SweepRow(h, 1.0, 1 / h) for h in HS[:3]])

    def test_mixed_regimes_rejected(self):
        rows = [SweepRow(h, 0.1, 1 / h) for h in (0.1, 0.05, 0.02, 0.005, 0.001)]
        with pytest.raises(ScalingError):
            fit_power_law(rows, ("fixed_eps", 0.1))

    def test_path_selection_ignores_other_rows(self):
        rows = [SweepRow(h, 1.0, h ** -1.5) for h in HS] + [SweepRow(h, 0.5, 7.0) for h in HS]
        assert fit_power_law(rows, ("fixed_eps", 1.0)).slope == pytest.approx(1.5)

    def test_unknown_path(self):
        with pytest.raises(ScalingError):
            fit_power_law([SweepRow(h, 1.0, 1 / h) for h in HS], ("diagonal", 1.0))

    @settings(max_examples=50, deadline=None)
    @given(slope=st.floats(-3, 3), logc=st.floats(-5, 5), n=st.integers(4, 12))
    def test_recovers_exact_power_laws(self, slope, logc, n):
        hs = [2.0 ** -k for k in range(3, 3 + n)]
        rows = [SweepRow(h, 1.0, math.exp(logc) * h ** -slope) for h in hs]
        fit = fit_power_law(rows)
        assert fit.slope == pytest.approx(slope, abs=1e-10)
        assert fit.intercept == pytest.approx(logc, abs=1e-9)
        # R^2 of flat data is rounding noise over rounding noise
        if abs(slope) > 1e-3:
            assert fit.r_squared == pytest.approx(1.0, abs=1e-10)


class TestPowerLawFit:
    def test_estimator_api(self):
        est = PowerLawFit(level=0.9)
        assert clone(est).get_params() == {"level": 0.9}
        X = np.array(HS)
        y = 3.0 * X ** -1.5
        est.fit(X, y)
        assert est.slope_ == pytest.approx(1.5)
        assert np.allclose(est.predict(X), y)
        assert est.score(X.reshape(-1, 1), y) == pytest.approx(1.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ScalingError):
            PowerLawFit().fit([0.1, 0.0], [1.0, 2.0])

    def test_unfitted_predict(self):
        from sklearn.exceptions import NotFittedError
        with pytest.raises(NotFittedError):
            PowerLawFit().predict([0.1])


class TestCrossover:
    def test_synthetic_breakpoint(self):
        h = 1e-4
        rows = [SweepRow(h, e, min(e ** 2 / h ** 2, e / h ** 1.5)) for e in np.geomspace(h ** 0.9, h ** 0.1, 17)]
        rep = regime_crossover_report(rows)
        assert rep.beta == pytest.approx(0.5, abs=1e-3)
        assert rep.slope_below == pytest.approx(2.0, abs=1e-6)
        assert rep.slope_above == pytest.approx(1.0, abs=1e-6)
        assert rep.variable == "epsilon"

    def test_single_regime_rejected(self):
        h = 1e-4
        rows = [SweepRow(h, e, e) for e in np.geomspace(0.1, 1.0, 6)]
        with pytest.raises(ScalingError):
            regime_crossover_report(rows)

    def test_too_few_rows(self):
        h = 1e-4
        with pytest.raises(ScalingError):
            regime_crossover_report([SweepRow(h, e, e) for e in (1e-3, 1e-1)])


class TestCSV:
    def test_round_trip(self):
        rows = [SweepRow(h, 1.0, 1 / h, "ansatz", "free", "cylinder", residual=1e-9, wall_seconds=0.5) for h in HS]
        text = rows_to_csv(rows, ["config_hash=abc", "seed=3"])
        assert text.startswith("# config_hash=abc\n# seed=3\n" + ",".join(CSV_COLUMNS))
        back = rows_from_csv(text)
        assert [r.csv_values() for r in back] == [r.csv_values() for r in rows]

    def test_wrong_columns(self):
        with pytest.raises(ScalingError):
            rows_from_csv("a,b\n1,2\n")

    def test_row_validation(self):
        with pytest.raises(ScalingError):
            SweepRow(0.1, 0.5, 0.0)
        assert SweepRow(1e-4, 0.5, 1.0).regime == "Regime2"


def test_compare_to_theory_flags_hyperbolic_note():
    rows = [SweepRow(h, 1.0, h ** (-4 / 3)) for h in HS]
    rep = compare_to_theory(rows, CurvatureClass.HYPERBOLIC, ("fixed_eps", 1.0), eps0=0.5)
    assert rep["theory_slope"] == pytest.approx(4 / 3)
    assert abs(rep["slope_error"]) < 1e-10
    assert "note" in rep and rep["eps_below_eps0"] == [False] * len(HS)
