import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import pearson_r2
from tagtrace.activity import (
    HoerlParams,
    Metric,
    correlation_r2,
    eval_hoerl,
    fit_hoerl,
    fit_hoerl_points,
    rank_distribution,
)
from tagtrace.errors import ConfigError, DegenerateInputError, EmptyCommunityError, RankDeficiencyError
from tagtrace.model import build_community


class TestRankDistribution:
    def test_assignment_counts(self, tiny):
        # u1 has 2 assignments in the tiny fixture, u2 has 1
        c = build_community(list(tiny.assignments) + [("u1", "t3", "i3", 200)])
        assert rank_distribution(c, "tag_assignments").points == ((1, 3), (2, 1))

    def test_single_user(self):
        c = build_community([("u", "t", "i", 1), ("u", "t", "j", 2)])
        assert rank_distribution(c, Metric.LIBRARY_SIZE).points == ((1, 2),)

    def test_ties_keep_distinct_ranks(self):
        c = build_community([("b", "t", "i", 1), ("a", "t", "j", 2)])
        assert rank_distribution(c, "library").points == ((1, 1), (2, 1))

    def test_vocabulary(self, tiny):
        assert rank_distribution(tiny, "vocabulary").points == ((1, 2), (2, 1))

    def test_empty(self):
        with pytest.raises(EmptyCommunityError):
            rank_distribution(build_community([]), "library")

    def test_sum_is_assignment_count(self, urn_community):
        d = rank_distribution(urn_community, "tag_assignments")
        assert d.values.sum() == urn_community.num_assignments
        assert list(d.ranks) == list(range(1, urn_community.num_users + 1))
        assert np.all(np.diff(d.values) <= 0) and d.values.min() >= 1


class TestCorrelation:
    def test_perfect(self):
        assert correlation_r2([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)

    def test_sign_blind(self):
        assert correlation_r2([1, 2, 3], [3, 2, 1]) == pytest.approx(1.0)

    def test_value(self):
        assert pearson_r2([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.64)
        assert correlation_r2([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.64, abs=1e-12)

    @pytest.mark.parametrize("xs,ys", [([1, 1, 1], [1, 2, 3]), ([1], [2]), ([1, 2], [1, 2, 3])])
    def test_degenerate(self, xs, ys):
        with pytest.raises(DegenerateInputError):
            correlation_r2(xs, ys)

    @settings(max_examples=100)
    @given(
        st.lists(st.floats(-100, 100), min_size=3, max_size=20).filter(lambda v: np.std(v) > 1e-3),
        st.floats(0.1, 10) | st.floats(-10, -0.1),
        st.floats(-50, 50),
        st.integers(0, 2**32 - 1),
    )
    def test_affine_invariance(self, xs, scale, shift, seed):
        ys = np.random.default_rng(seed).normal(size=len(xs))
        base = correlation_r2(xs, ys)
        assert correlation_r2([scale * x + shift for x in xs], ys) == pytest.approx(base, abs=1e-9)
        assert correlation_r2(xs, ys * scale + shift) == pytest.approx(base, abs=1e-9)
        assert base == pytest.approx(pearson_r2(list(xs), list(ys)), abs=1e-9)


class TestEvalHoerl:
    def test_identity(self):
        assert eval_hoerl(HoerlParams(1, 1, 0), 7) == 1.0

    def test_arithmetic(self):
        assert eval_hoerl(HoerlParams(2, 1, 1), 3) == pytest.approx(6.0)

    def test_table_coefficients(self):
        assert eval_hoerl(HoerlParams(9767.13, 0.9979, -0.4754), 1) == pytest.approx(9746.62, abs=0.01)

    def test_domain(self):
        with pytest.raises(ValueError):
            eval_hoerl(HoerlParams(1, 1, 0), 0)

    def test_reductions(self):
        x = np.arange(1, 50, dtype=float)
        np.testing.assert_allclose(eval_hoerl(HoerlParams(3, 1, -0.7), x), 3 * x ** -0.7, rtol=1e-14)
        np.testing.assert_allclose(eval_hoerl(HoerlParams(3, 0.95, 0), x), 3 * 0.95 ** x, rtol=1e-14)

    def test_invalid_params(self):
        with pytest.raises(ConfigError):
            HoerlParams(0, 1, 0)
        with pytest.raises(ConfigError):
            HoerlParams(1, -1, 0)


def _rel(a, b):
    return abs(a - b) / abs(b)


class TestFit:
    def test_round_trip(self):
        p = HoerlParams(100, 0.99, -0.5)
        x = np.arange(1, 201)
        fit = fit_hoerl_points(x, eval_hoerl(p, x))
        assert _rel(fit.params.a, 100) < 1e-6
        assert _rel(fit.params.b, 0.99) < 1e-6
        assert _rel(fit.params.c, -0.5) < 1e-6
        assert fit.r2_log == pytest.approx(1.0, abs=1e-12)
        assert fit.n_points == 200

    def test_flat(self):
        fit = fit_hoerl_points(np.arange(1, 11), np.full(10, 5.0))
        assert fit.params.a == pytest.approx(5, abs=1e-9)
        assert fit.params.b == pytest.approx(1, abs=1e-9)
        assert fit.params.c == pytest.approx(0, abs=1e-9)
        assert fit.r2_log == 1.0

    def test_table_generator_recovered(self):
        p = HoerlParams(9767.13, 0.9979, -0.4754)
        x = np.arange(1, 1001)
        fit = fit_hoerl_points(x, eval_hoerl(p, x))
        for got, want in zip((fit.params.a, fit.params.b, fit.params.c), (p.a, p.b, p.c)):
            assert _rel(got, want) < 0.01

    def test_too_few_points(self):
        with pytest.raises(RankDeficiencyError):
            fit_hoerl_points([1, 2], [3, 4])

    def test_singular_design(self):
        with pytest.raises(RankDeficiencyError):
            fit_hoerl_points([2, 2, 2, 2], [1, 2, 3, 4])

    def test_nonpositive_values(self):
        with pytest.raises(ValueError):
            fit_hoerl_points([1, 2, 3], [1, 0, 2])

    def test_on_rank_distribution(self, urn_community):
        fit = fit_hoerl(rank_distribution(urn_community, "tag_assignments"))
        assert fit.n_points == urn_community.num_users
        assert 0.9 < fit.r2_log <= 1.0
        assert fit.params.b < 1.0 and fit.params.c < 0

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1, 1e4), st.floats(0.9, 1.1), st.floats(-2, 0))
    def test_round_trip_property(self, a, b, c):
        x = np.arange(1, 201)
        fit = fit_hoerl_points(x, eval_hoerl(HoerlParams(a, b, c), x))
        assert math.isclose(fit.params.a, a, rel_tol=1e-6)
        assert math.isclose(fit.params.b, b, rel_tol=1e-6)
        # c can be arbitrarily close to zero, where relative error is meaningless
        assert math.isclose(fit.params.c, c, rel_tol=1e-6, abs_tol=1e-9)
