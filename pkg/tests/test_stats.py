import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from oa_policy_lab.encoding import ConditionId
from oa_policy_lab.stats import (
    CorrelationResult,
    ZeroVarianceError,
    pearson,
    screen_conditions,
    t_two_tailed_p,
)


def oracle_r(x, y):
    """Product-moment r straight from its definition, fsum arithmetic."""
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = math.fsum((a - mx) ** 2 for a in x)
    syy = math.fsum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def t_density(t, df):
    return (
        math.gamma((df + 1) / 2)
        / (math.sqrt(df * math.pi) * math.gamma(df / 2))
        * (1 + t * t / df) ** (-(df + 1) / 2)
    )


def oracle_p(r, n):
    """Two-tailed tail probability by numerical integration of the t density."""
    df = n - 2
    if abs(r) >= 1.0:
        return 0.0
    t = abs(r) * math.sqrt(df / (1 - r * r))
    tail, _ = integrate.quad(t_density, t, np.inf, args=(df,), epsabs=1e-13, limit=200)
    return 2.0 * tail


class TestPearson:
    def test_perfect_linear_relation(self):
        result = pearson([1, 2, 3], [2, 4, 6])
        assert result.r == 1.0
        assert result.p == 0.0
        assert result.n == 3

    def test_constant_input_raises(self):
        with pytest.raises(ZeroVarianceError):
            pearson([1, 2, 3], [5, 5, 5])
        with pytest.raises(ZeroVarianceError):
            pearson([4, 4, 4], [1, 2, 3])

    def test_against_brute_force_oracle(self):
        x = [1, 2, 3, 4, 5]
        y = [2, 1, 4, 3, 5]
        result = pearson(x, y)
        assert result.r == pytest.approx(oracle_r(x, y), abs=1e-14)
        assert result.r == pytest.approx(0.8, abs=1e-14)
        assert result.p == pytest.approx(oracle_p(0.8, 5), abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            pearson([1, 2, 3], [1, 2])

    def test_too_few_pairs(self):
        with pytest.raises(ValueError, match="at least 3"):
            pearson([1, 2], [3, 4])

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_symmetry_and_affine_invariance(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 40))
        x = rng.normal(size=n)
        y = rng.normal(size=n)
        if np.ptp(x) == 0 or np.ptp(y) == 0:
            return
        base = pearson(x, y)
        flipped = pearson(y, x)
        assert flipped.r == pytest.approx(base.r, abs=1e-12)
        assert flipped.p == pytest.approx(base.p, abs=1e-12)
        a, b = float(rng.uniform(0.1, 5)), float(rng.uniform(-3, 3))
        scaled = pearson(a * x + b, y)
        assert scaled.r == pytest.approx(base.r, abs=1e-10)
        assert scaled.p == pytest.approx(base.p, abs=1e-10)
        negated = pearson(-x, y)
        assert negated.r == pytest.approx(-base.r, abs=1e-12)
        assert negated.p == pytest.approx(base.p, abs=1e-12)


class TestTDistribution:
    @pytest.mark.parametrize("df", [3, 10, 30])
    def test_matches_numerical_integration(self, df):
        for t in (0.0, 0.31, 1.0, 2.05, 3.7, 8.0):
            tail, _ = integrate.quad(
                t_density, t, np.inf, args=(df,), epsabs=1e-13, limit=200
            )
            assert t_two_tailed_p(t, df) == pytest.approx(2 * tail, abs=1e-9)

    def test_rejects_bad_df(self):
        with pytest.raises(ValueError):
            t_two_tailed_p(1.0, 0)


def result(condition, r):
    return CorrelationResult(r=r, p=0.5, n=100, condition=condition)


class TestScreening:
    def test_just_below_threshold_is_eliminated(self):
        screening = screen_conditions([result(ConditionId.MUST_DEPOSIT, 0.099)])
        assert screening.retained == ()
        assert screening.eliminated == (ConditionId.MUST_DEPOSIT,)

    def test_magnitude_counts_regardless_of_sign(self):
        screening = screen_conditions([result(ConditionId.CANNOT_WAIVE_DEPOSIT, -0.244)])
        assert screening.retained == (ConditionId.CANNOT_WAIVE_DEPOSIT,)

    def test_exact_threshold_is_retained(self):
        screening = screen_conditions([result(ConditionId.MUST_DEPOSIT, 0.1)])
        assert screening.retained == (ConditionId.MUST_DEPOSIT,)

    def test_duplicate_condition_rejected(self):
        rows = [result(ConditionId.MUST_DEPOSIT, 0.2), result(ConditionId.MUST_DEPOSIT, 0.3)]
        with pytest.raises(ValueError, match="duplicate"):
            screen_conditions(rows)

    def test_untagged_result_rejected(self):
        with pytest.raises(ValueError, match="condition-tagged"):
            screen_conditions([CorrelationResult(r=0.5, p=0.01, n=10)])

    def test_reports_r_values_for_both_partitions(self):
        rows = [
            result(ConditionId.MUST_DEPOSIT, 0.3),
            result(ConditionId.OPEN_LICENSING, 0.05),
        ]
        screening = screen_conditions(rows)
        assert screening.r_values[ConditionId.MUST_DEPOSIT] == 0.3
        assert screening.r_values[ConditionId.OPEN_LICENSING] == 0.05
        assert screening.eliminated == (ConditionId.OPEN_LICENSING,)
