"""L-moment estimators against an exhaustive oracle and closed forms."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from redisco.errors import DataError, NumericError
from redisco.lmoments import (
    Feasibility,
    LMoments,
    diagram_to_csv,
    ecdf_weibull,
    kappa_feasibility,
    ratio_diagram_data,
    sample_lambdas,
    sample_lmoments,
    sample_pwms,
    tau4_glo_bound,
    tau4_lower_bound,
    theoretical_lmoments,
)

from helpers import exhaustive_lambdas

EULER_GAMMA = 0.5772156649015329


def test_lambdas_match_exhaustive_oracle():
    rng = np.random.default_rng(12345)
    for n in range(1, 9):
        for _ in range(20):
            values = rng.uniform(-10.0, 10.0, n)
            got = sample_lambdas(values)
            want = exhaustive_lambdas(values)
            assert len(got) == len(want) == min(4, n)
            for g, w in zip(got, want):
                assert math.isclose(g, w, rel_tol=1e-10, abs_tol=1e-10)


def test_lambdas_match_oracle_with_ties():
    values = [0.0, 0.0, 1.0, 2.0, 2.0, 2.0]
    got = sample_lambdas(values)
    want = exhaustive_lambdas(values)
    for g, w in zip(got, want):
        assert math.isclose(g, w, rel_tol=1e-13, abs_tol=1e-13)


def test_small_sample_partial_orders():
    assert sample_lambdas([5.0]) == (5.0,)
    l1, l2 = sample_lambdas([1.0, 3.0])
    assert l1 == pytest.approx(2.0)
    # l2 is half the mean absolute difference
    assert l2 == pytest.approx(1.0)


def test_pwm_count_tracks_sample_size():
    assert len(sample_pwms([1.0])) == 1
    assert len(sample_pwms([1.0, 2.0, 3.0])) == 3
    assert len(sample_pwms(np.arange(10.0))) == 4
    with pytest.raises(DataError):
        sample_pwms([])


def test_sample_lmoments_requires_four_values():
    with pytest.raises(DataError, match="at least 4"):
        sample_lmoments([1.0, 2.0, 3.0])


def test_sample_lmoments_rejects_constant_sample():
    with pytest.raises(NumericError, match="constant"):
        sample_lmoments([2.0, 2.0, 2.0, 2.0])


def test_lmoments_validation():
    with pytest.raises(NumericError):
        LMoments(0.0, -0.1, 0.0, 0.0)
    with pytest.raises(NumericError):
        LMoments(0.0, 1.0, 1.2, 0.0)
    with pytest.raises(NumericError):
        LMoments(0.0, 1.0, 0.0, -0.3)  # below the population bound
    with pytest.raises(NumericError):
        LMoments(math.nan, 1.0, 0.0, 0.0, n=9)
    lm = LMoments(1.0, 0.5, 0.3, 0.17, n=25)
    assert lm.n == 25
    # small-sample estimates may leave the population region
    wild = sample_lmoments([0.0, 0.0, 1.0, 1.0])
    assert wild.tau4 == pytest.approx(-1.5)


def test_ecdf_weibull():
    assert ecdf_weibull(1, 4) == pytest.approx(0.2)
    assert ecdf_weibull(4, 4) == pytest.approx(0.8)
    with pytest.raises(ValueError):
        ecdf_weibull(0, 4)
    with pytest.raises(ValueError):
        ecdf_weibull(5, 4)


@settings(max_examples=60, deadline=None)
@given(
    values=st.lists(st.integers(-1000, 1000), min_size=4, max_size=40).filter(
        lambda v: len(set(v)) >= 2
    ),
    scale=st.sampled_from([0.25, 1.5, 3.0]),
    shift=st.integers(-50, 50),
)
def test_shift_scale_equivariance(values, scale, shift):
    base = sample_lmoments([float(v) for v in values])
    moved = sample_lmoments([scale * v + shift for v in values])
    assert moved.lambda1 == pytest.approx(scale * base.lambda1 + shift, abs=1e-9)
    assert moved.lambda2 == pytest.approx(scale * base.lambda2, rel=1e-9)
    assert moved.tau3 == pytest.approx(base.tau3, abs=1e-9)
    assert moved.tau4 == pytest.approx(base.tau4, abs=1e-9)
    flipped = sample_lmoments([-float(v) for v in values])
    assert flipped.lambda1 == pytest.approx(-base.lambda1, abs=1e-9)
    assert flipped.tau3 == pytest.approx(-base.tau3, abs=1e-9)
    assert flipped.tau4 == pytest.approx(base.tau4, abs=1e-9)


def test_bounds_and_feasibility():
    assert tau4_lower_bound(0.0) == pytest.approx(-0.25)
    assert tau4_glo_bound(0.0) == pytest.approx(1.0 / 6.0)
    assert kappa_feasibility(0.0, 0.0) is Feasibility.FEASIBLE
    assert kappa_feasibility(0.0, 0.2) is Feasibility.ABOVE_GLO
    assert kappa_feasibility(0.0, -0.3) is Feasibility.BELOW_LIMIT
    # both boundaries are feasible
    assert kappa_feasibility(0.4, tau4_glo_bound(0.4)) is Feasibility.FEASIBLE
    assert kappa_feasibility(0.4, tau4_lower_bound(0.4)) is Feasibility.FEASIBLE
    with pytest.raises(ValueError):
        kappa_feasibility(1.0, 0.0)


def test_theoretical_uniform():
    lm = theoretical_lmoments(lambda u: u)
    assert lm.lambda1 == pytest.approx(0.5, abs=1e-10)
    assert lm.lambda2 == pytest.approx(1.0 / 6.0, abs=1e-10)
    assert lm.tau3 == pytest.approx(0.0, abs=1e-9)
    assert lm.tau4 == pytest.approx(0.0, abs=1e-9)
    assert lm.n == 0


def test_theoretical_exponential():
    lm = theoretical_lmoments(lambda u: -np.log1p(-u))
    assert lm.lambda1 == pytest.approx(1.0, abs=1e-9)
    assert lm.lambda2 == pytest.approx(0.5, abs=1e-9)
    assert lm.tau3 == pytest.approx(1.0 / 3.0, abs=1e-9)
    assert lm.tau4 == pytest.approx(1.0 / 6.0, abs=1e-9)


def test_theoretical_gumbel():
    lm = theoretical_lmoments(lambda u: -np.log(-np.log(u)))
    assert lm.lambda1 == pytest.approx(EULER_GAMMA, abs=1e-9)
    assert lm.lambda2 == pytest.approx(math.log(2.0), abs=1e-9)
    assert lm.tau3 == pytest.approx(2.0 * math.log(3.0) / math.log(2.0) - 3.0, abs=1e-9)
    assert lm.tau4 == pytest.approx(16.0 - 10.0 * math.log(3.0) / math.log(2.0), abs=1e-9)


@pytest.mark.parametrize("k", [-0.3, 0.5, 1.0, 3.0])
def test_theoretical_gpa_closed_form(k):
    lm = theoretical_lmoments(lambda u: -np.expm1(k * np.log1p(-u)) / k)
    assert lm.lambda1 == pytest.approx(1.0 / (1.0 + k), abs=1e-8)
    assert lm.lambda2 == pytest.approx(1.0 / ((1.0 + k) * (2.0 + k)), abs=1e-8)
    assert lm.tau3 == pytest.approx((1.0 - k) / (3.0 + k), abs=1e-8)
    assert lm.tau4 == pytest.approx(
        (1.0 - k) * (2.0 - k) / ((3.0 + k) * (4.0 + k)), abs=1e-8
    )


def test_theoretical_rejects_bad_quantile():
    with pytest.raises(ValueError, match="vectorized"):
        theoretical_lmoments(lambda u: 1.0)
    with pytest.raises(NumericError):
        theoretical_lmoments(lambda u: 1.0 - u)  # decreasing: lambda2 < 0


def test_diagram_geometry():
    data = ratio_diagram_data(grid_step=0.3)
    assert set(data.curves) == {"GLO", "GEV", "GNO", "GPA", "PE3"}
    assert set(data.marks) == {"EXP", "NOR", "GUM", "RAY", "UNI"}
    assert set(data.bounds) == {"GLO_UPPER", "THEORETICAL_LOWER"}
    # the GLO curve satisfies its closed-form tau3/tau4 identity; past
    # |tau3| ~ 0.6 the quadrature loses digits on the heavy tail, which is
    # acceptable for a plotting dataset but excluded from the tight check
    for t3, t4 in data.curves["GLO"]:
        if abs(t3) <= 0.6:
            assert t4 == pytest.approx(tau4_glo_bound(t3), abs=2e-6)
    # marks agree with closed forms
    assert data.marks["UNI"] == pytest.approx((0.0, 0.0), abs=1e-9)
    assert data.marks["EXP"] == pytest.approx((1.0 / 3.0, 1.0 / 6.0), abs=1e-9)
    assert data.marks["NOR"][0] == pytest.approx(0.0, abs=1e-9)
    assert data.marks["NOR"][1] == pytest.approx(
        30.0 / math.pi * math.atan(math.sqrt(2.0)) - 9.0, abs=1e-8
    )
    gum_t3 = 2.0 * math.log(3.0) / math.log(2.0) - 3.0
    assert data.marks["GUM"][0] == pytest.approx(gum_t3, abs=1e-8)
    # PE3 at tau3 = 0 degenerates to the normal point
    zero = [t4 for t3, t4 in data.curves["PE3"] if abs(t3) < 1e-9]
    assert zero and zero[0] == pytest.approx(data.marks["NOR"][1], abs=1e-7)
    with pytest.raises(ValueError):
        ratio_diagram_data(grid_step=0.0)


def test_diagram_overlay_and_csv():
    lm = LMoments(1.0, 0.5, 0.25, 0.18, n=40)
    data = ratio_diagram_data(samples=[("r1", lm)], grid_step=0.3)
    assert data.points == ((0.25, 0.18, "r1"),)
    csv_text = diagram_to_csv(data)
    lines = csv_text.strip().split("\n")
    assert lines[0] == "series,label,tau3,tau4"
    kinds = {line.split(",")[0] for line in lines[1:]}
    assert kinds == {"curve", "point", "bound", "sample"}
    assert "sample,r1,0.25,0.18" in csv_text
    n_rows = (
        sum(len(c) for c in data.curves.values())
        + len(data.marks)
        + sum(len(b) for b in data.bounds.values())
        + len(data.points)
    )
    assert len(lines) == 1 + n_rows
