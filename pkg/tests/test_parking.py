import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from parkrelay.parking import (
    ConfigError,
    DegenerateConditionError,
    DualGammaHourParams,
    Relay,
    WeibullArrival,
    arrival_cdf,
    arrival_mean,
    arrival_pdf,
    arrival_quantile,
    default_table_document,
    duration_pdf,
    duration_sf,
    exponential_parking_model,
    leave_probability,
    load_parking_model,
    parse_parking_model,
    sample_arrival,
    sample_duration,
    survival_probability,
    survival_probability_printed,
)
from parkrelay.validation import tail_quad

GENERAL = DualGammaHourParams(1.2, 1.25, 1.6, 6.25, 0.3, 0.7)
# Tail-ratio values of GENERAL, frozen from 30-digit mpmath quadrature.
SURVIVAL_2_3 = 0.692303374939275091512458657659
LEAVE_4_HALF = 0.0555989478846190813977846135118

params_strategy = st.builds(
    lambda ks, ts, kl, tl, d1: DualGammaHourParams(ks, ts, kl, tl, d1, 1.0 - d1),
    st.floats(0.2, 20.0),
    st.floats(0.1, 10.0),
    st.floats(0.2, 20.0),
    st.floats(0.1, 10.0),
    st.floats(0.0, 1.0),
)


# -- arrivals -----------------------------------------------------------------

def test_arrival_pdf_exponential_case():
    assert arrival_pdf(WeibullArrival(1.0, 1.0), 1.0) == pytest.approx(math.exp(-1))


def test_arrival_pdf_at_zero_is_unbounded_for_default_shape():
    assert arrival_pdf(WeibullArrival(), 0.0) == math.inf
    with pytest.raises(ValueError):
        arrival_pdf(WeibullArrival(), -0.1)


def test_arrival_pdf_integrates_to_one():
    m = WeibullArrival()
    f = lambda t: arrival_pdf(m, t)
    total = sum(integrate.quad(f, a, b, limit=200)[0] for a, b in [(0, 1), (1, 50), (50, 500)])
    assert total == pytest.approx(1.0, abs=1e-6)


def test_truncated_quantile_endpoints():
    m = WeibullArrival()
    assert arrival_quantile(m, 0.0) == 0.0
    top = arrival_quantile(m, 1.0)
    assert top < 24.0 and top > 23.999
    assert arrival_quantile(m, 1 - 1e-12) < 24.0


def test_truncation_mass_is_substantial():
    # Almost a quarter of the untruncated law lies past midnight.
    assert 1.0 - arrival_cdf(WeibullArrival(), 24.0) == pytest.approx(0.2417, abs=1e-4)


def test_sampled_arrivals_match_truncated_pdf():
    m = WeibullArrival()
    x = sample_arrival(m, np.random.default_rng(3), 10**6)
    assert x.min() >= 0.0 and x.max() < 24.0
    edges = np.arange(25.0)
    observed, _ = np.histogram(x, edges)
    mass = arrival_cdf(m, 24.0)
    expected = np.diff([arrival_cdf(m, e) for e in edges]) / mass * x.size
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_arrival_mean_matches_quadrature():
    m = WeibullArrival()
    num = integrate.quad(lambda t: t * arrival_pdf(m, t), 0, 24, limit=200)[0]
    assert arrival_mean(m) == pytest.approx(num / arrival_cdf(m, 24.0), rel=1e-9)


# -- durations ----------------------------------------------------------------

def test_duration_pdf_single_exponential():
    p = DualGammaHourParams(1.0, 2.0, 3.0, 1.0, 1.0, 0.0)
    assert duration_pdf(p, 2.0) == pytest.approx(0.5 * math.exp(-1))


def test_duration_pdf_identical_components_is_single_gamma():
    p = DualGammaHourParams(2.5, 1.5, 2.5, 1.5, 0.5, 0.5)
    for x in (0.1, 1.0, 7.0):
        assert duration_pdf(p, x) == pytest.approx(stats.gamma.pdf(x, 2.5, scale=1.5), rel=1e-13)


def test_duration_pdf_integrates_to_weight_sum():
    f = lambda x: duration_pdf(GENERAL, x)
    total = sum(integrate.quad(f, a, b, limit=200)[0] for a, b in [(0, 1), (1, 100), (100, 1e4)])
    assert total == pytest.approx(1.0, abs=1e-6)


def test_duration_pdf_domain():
    with pytest.raises(ValueError):
        duration_pdf(GENERAL, 0.0)


@pytest.mark.parametrize("t_a", [0.0, 5.0, 13.7, 48.0])
def test_survival_is_one_at_zero_horizon(t_a):
    assert survival_probability(GENERAL, t_a, 0.0) == 1.0


def test_survival_general_against_frozen_quadrature():
    assert survival_probability(GENERAL, 2.0, 3.0) == pytest.approx(SURVIVAL_2_3, rel=1e-8)
    assert leave_probability(GENERAL, 4.0, 0.5) == pytest.approx(LEAVE_4_HALF, rel=1e-8)


def test_survival_against_live_quadrature():
    ref = tail_quad(GENERAL, 7.5) / tail_quad(GENERAL, 3.25)
    assert survival_probability(GENERAL, 3.25, 4.25) == pytest.approx(ref, rel=1e-8)


def test_printed_lower_gamma_form_agrees_where_well_conditioned():
    for t_a, n in [(0.5, 1.0), (2.0, 3.0), (6.0, 0.25)]:
        assert survival_probability_printed(GENERAL, t_a, n) == pytest.approx(
            survival_probability(GENERAL, t_a, n), rel=1e-9
        )


def test_printed_form_loses_precision_in_far_tail():
    p = DualGammaHourParams(2.0, 0.5, 3.0, 0.5, 0.5, 0.5)
    good = survival_probability(p, 30.0, 0.5)
    ref = tail_quad(p, 30.5) / tail_quad(p, 30.0)
    assert good == pytest.approx(ref, rel=1e-8)
    # Both lower-gamma sums round to Gamma(k_s) Gamma(k_l) and the ratio is 0/0.
    with pytest.raises(ZeroDivisionError):
        survival_probability_printed(p, 30.0, 0.5)


def test_survival_extinct_denominator():
    p = DualGammaHourParams(1.0, 0.01, 1.0, 0.01, 0.5, 0.5)
    with pytest.raises(DegenerateConditionError):
        survival_probability(p, 50.0, 1.0)


@pytest.mark.parametrize("theta", [0.5, 4.0, 9.0])
def test_exponential_memorylessness(theta):
    p = exponential_parking_model(theta).params(0)
    for t_a in (0.0, 3.0, 17.0):
        assert survival_probability(p, t_a, 2.0) == pytest.approx(math.exp(-2.0 / theta), rel=1e-12)
    leaves = [leave_probability(p, t, 0.25) for t in np.linspace(0, 20, 41)]
    assert max(leaves) - min(leaves) <= 1e-10
    assert leaves[0] == pytest.approx(-math.expm1(-0.25 / theta), rel=1e-12)


def test_leave_probability_vanishes_with_window():
    for tau in (1e-3, 1e-6, 1e-9):
        assert leave_probability(GENERAL, 4.0, tau) < 10 * tau
    assert leave_probability(GENERAL, 0.0, 1e-12) < 1e-9


def test_leave_probability_argument_checks():
    with pytest.raises(ValueError):
        leave_probability(GENERAL, 1.0, 0.0)
    with pytest.raises(ValueError):
        leave_probability(GENERAL, -1.0, 0.1)


@given(p=params_strategy, t_a=st.floats(0.0, 48.0))
def test_survival_nonincreasing_in_horizon(p, t_a):
    if duration_sf(p, t_a) < 1e-250:
        return
    vals = [survival_probability(p, t_a, n) for n in np.linspace(0.0, 24.0, 50)]
    assert vals[0] == 1.0
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


@given(p=params_strategy, t_dur=st.floats(0.0, 24.0), t1=st.floats(1e-4, 2.0), t2=st.floats(1e-4, 2.0))
def test_leave_probability_monotone_in_window(p, t_dur, t1, t2):
    if duration_sf(p, t_dur) < 1e-250:
        return
    lo, hi = sorted((t1, t2))
    a, b = leave_probability(p, t_dur, lo), leave_probability(p, t_dur, hi)
    assert 0.0 <= a <= b + 1e-15 <= 1.0 + 1e-15


def test_survival_unit_on_table(model):
    for h in range(24):
        for t_a in np.linspace(0, 48, 13):
            assert survival_probability(model.params(h), float(t_a), 0.0) == 1.0


# -- sampling -----------------------------------------------------------------

def test_sample_duration_short_only():
    p = DualGammaHourParams(1.0, 0.001, 50.0, 10.0, 1.0, 0.0)
    assert sample_duration(p, np.random.default_rng(0), 1000).max() < 0.05


def test_sample_duration_mean():
    x = sample_duration(GENERAL, np.random.default_rng(1), 10**6)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - GENERAL.mean) < 3 * se


def test_sample_duration_ks_against_quadrature_cdf():
    x = sample_duration(GENERAL, np.random.default_rng(2), 10**5)
    grid = np.linspace(0, 80, 801)
    cdf_grid = [1.0 - tail_quad(GENERAL, float(g)) if g > 0 else 0.0 for g in grid]
    cdf = lambda v: np.interp(v, grid, cdf_grid)
    # Interpolating a dense quadrature grid; the grid error is far below KS resolution.
    assert stats.kstest(x, cdf).pvalue > 0.01


# -- table loading ------------------------------------------------------------

def test_bundled_table_is_labelled_synthetic(model):
    assert "SYNTHETIC" in model.description
    for h in range(24):
        p = model.params(h)
        assert 1.0 <= p.kappa_s * p.theta_s <= 2.0
        assert 8.0 <= p.kappa_l * p.theta_l <= 10.0 + 1e-12


def test_morning_arrivals_favour_long_stays(model):
    morning = np.mean([model.params(h).d2 for h in range(7, 11)])
    evening = np.mean([model.params(h).d2 for h in range(16, 20)])
    assert morning > evening


def test_weights_must_sum_to_one(tmp_path):
    doc = default_table_document()
    doc["hours"][5]["d1"] = 0.7
    doc["hours"][5]["d2"] = 0.4
    path = tmp_path / "table.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ConfigError, match=r"hours\[5\].*d1 \+ d2"):
        load_parking_model(path)


def test_table_errors_are_collected_per_field():
    doc = default_table_document()
    doc["weibull"]["beta"] = -1
    doc["hours"][2]["kappa_s"] = "big"
    doc["hours"][9]["theta_l"] = 0
    with pytest.raises(ConfigError) as exc:
        parse_parking_model(doc, "t.json")
    text = str(exc.value)
    assert "weibull.beta" in text and "hours[2].kappa_s" in text and "hours[9]" in text


def test_table_missing_and_duplicate_hours():
    doc = default_table_document()
    doc["hours"][3]["hour"] = 4
    with pytest.raises(ConfigError, match="duplicate"):
        parse_parking_model(doc)
    doc = default_table_document()
    del doc["hours"][7]
    with pytest.raises(ConfigError, match=r"hour\(s\) \[7\]"):
        parse_parking_model(doc)


def test_table_json_error_has_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "weibull": {,\n}')
    with pytest.raises(ConfigError, match=r"broken.json:2:\d+"):
        load_parking_model(path)


def test_shape_above_supported_range_rejected():
    with pytest.raises(ConfigError):
        DualGammaHourParams(60.0, 1.0, 1.0, 1.0, 0.5, 0.5)


def test_relay_validation():
    with pytest.raises(ValueError):
        Relay(24, 1.0)
    with pytest.raises(ValueError):
        Relay(3, -0.5)
    with pytest.raises(ValueError):
        Relay(3, 0.5, planned_duration=0.0)
