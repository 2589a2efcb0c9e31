import os

import numpy as np
import pandas as pd
import pytest

import config
import sweep
import turbulence
from errors import ConfigError, OutOfRangeError
from loaders import SyntheticLoader
from models import AOParams, FilterStrategy, Scenario, SiteModel, Spacing, SweepAxis, SweepSettings, SweepSpec
from scenario import load_scenario

SCENARIOS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "scenarios")


def _spec(scenario, **settings):
    return SweepSpec(settings=SweepSettings(**settings), scenario=scenario)


def test_axis_grid_spacing():
    linear = sweep.axis_grid(SweepSettings(minimum=0.1, maximum=0.5, points=5))
    np.testing.assert_allclose(linear, [0.1, 0.2, 0.3, 0.4, 0.5])
    log = sweep.axis_grid(SweepSettings(minimum=0.01, maximum=1.0, points=3, spacing=Spacing.LOG))
    np.testing.assert_allclose(log, [0.01, 0.1, 1.0])


def test_sweep_settings_validation():
    with pytest.raises(ValueError):
        SweepSettings(minimum=1.0, maximum=0.5)
    with pytest.raises(ValueError):
        SweepSettings(axis=SweepAxis.STREHL, minimum=0.1, maximum=1.5)
    with pytest.raises(ValueError):
        SweepSettings(minimum=0.0, maximum=1.0, spacing=Spacing.LOG)


def test_r0_sweep_rows_and_columns(winter_scenario):
    rows = sweep.run_sweep(_spec(winter_scenario, minimum=0.1, maximum=0.4, points=4), workers=1)
    assert [row.axis_value for row in rows] == pytest.approx([0.1, 0.2, 0.3, 0.4])
    assert all(len(row.entries) == 6 for row in rows)

    frame = sweep.sweep_frame(rows)
    assert list(frame.columns) == sweep.CSV_COLUMNS
    assert len(frame) == 24
    assert set(frame["strategy"]) == {"dl", "tl"}
    assert (frame["r_kb_hz"] >= 0).all()


def test_sweep_order_is_independent_of_workers(winter_scenario):
    spec = _spec(winter_scenario, minimum=0.05, maximum=0.5, points=6)
    serial = sweep.sweep_frame(sweep.run_sweep(spec, workers=1))
    threaded = sweep.sweep_frame(sweep.run_sweep(spec, workers=4))
    pd.testing.assert_frame_equal(serial, threaded)


def test_tl_rate_not_below_dl(winter_scenario):
    rows = sweep.run_sweep(_spec(winter_scenario, minimum=0.1, maximum=1.0, points=5), workers=1)
    for row in rows:
        for wl in (1549.91, 780.945, 430.886):
            rates = {e.strategy: e.r_kb_hz for e in row.entries if e.wavelength_nm == wl}
            assert rates[FilterStrategy.TL] >= rates[FilterStrategy.DL]


def test_strehl_axis_reproduces_requested_strehl(winter_scenario):
    spec = _spec(
        winter_scenario, axis=SweepAxis.STREHL, minimum=0.1, maximum=0.9, points=3,
        wavelengths_nm=(780.945,), strategies=(FilterStrategy.TL,),
    )
    rows = sweep.run_sweep(spec, workers=1)
    for row in rows:
        budget = row.entries[0].budget
        assert budget.r0_source == "strehl"
        assert budget.strehl == pytest.approx(row.axis_value, rel=1e-9)


def test_bandwidth_axis_adds_dl_limit_column(site_scenario):
    spec = _spec(
        site_scenario, axis=SweepAxis.FC, minimum=50.0, maximum=500.0, points=3,
        wavelengths_nm=(430.886,), strategies=(FilterStrategy.TL,),
    )
    rows = sweep.run_sweep(spec, workers=1)
    frame = sweep.sweep_frame(rows)
    assert list(frame.columns) == sweep.CSV_COLUMNS + [sweep.DL_LIMIT_COLUMN]
    assert (frame[sweep.DL_LIMIT_COLUMN] >= frame["r_kb_hz"]).all()
    r0_values = frame["r0_m"].tolist()
    assert r0_values == sorted(r0_values)


def test_bandwidth_axis_needs_site(winter_scenario):
    with pytest.raises(ConfigError):
        sweep.run_sweep(_spec(winter_scenario, axis=SweepAxis.FC, minimum=50.0, maximum=500.0, points=3))


def test_wavelength_axis(winter_scenario):
    spec = _spec(winter_scenario, axis=SweepAxis.WAVELENGTH, minimum=425.0, maximum=437.0, points=4)
    frame = sweep.sweep_frame(sweep.run_sweep(spec, workers=1))
    assert (frame["lambda_nm"] == frame["axis_value"]).all()
    assert len(frame) == 8


def test_failed_points_are_recorded(dip_profile):
    scenario = Scenario(profile=dip_profile, profile_source=dip_profile.source, r0_m=0.5)
    spec = _spec(scenario, minimum=0.1, maximum=0.2, points=2, wavelengths_nm=(700.0, 1549.91))
    rows = sweep.run_sweep(spec, workers=1)
    failed = [e for row in rows for e in row.entries if e.wavelength_nm == 1549.91]
    assert failed and all(e.error and e.budget is None for e in failed)

    frame = sweep.sweep_frame(rows)
    bad = frame[frame["lambda_nm"] == 1549.91]
    assert (bad["r_kb_hz"] == 0.0).all()
    assert bad["flags"].str.startswith("error:").all()
    assert bad["eta_total"].isna().all()


def test_wavelength_grid():
    np.testing.assert_allclose(sweep.wavelength_grid(400.0, 401.0, 0.25), [400.0, 400.25, 400.5, 400.75, 401.0])


def test_optimizer_finds_single_dip(dip_profile):
    scenario = Scenario(profile=dip_profile, profile_source=dip_profile.source, r0_m=0.5)
    result = sweep.optimize_wavelength(scenario, filter_width_nm=1.0, search_nm=(690.0, 710.0), step_nm=0.5)
    assert not result.no_key
    assert result.wavelength_nm == pytest.approx(700.0, abs=0.5)
    assert result.r_kb_hz == max(row.entries[0].r_kb_hz for row in result.rows)
    assert len(result.rows) == 41


def test_optimizer_reports_no_key():
    bright = SyntheticLoader().load("builtin:flat-single-dip", radiance=1e4, depth=0.0)
    scenario = Scenario(profile=bright, profile_source=bright.source, r0_m=0.5)
    result = sweep.optimize_wavelength(scenario, filter_width_nm=1.0, search_nm=(690.0, 710.0))
    assert result.no_key
    assert result.wavelength_nm is None
    assert result.r_kb_hz == 0.0
    assert result.grid_step_nm == 0.5


def test_optimizer_rejects_coarse_step(dip_profile):
    scenario = Scenario(profile=dip_profile, profile_source=dip_profile.source, r0_m=0.5)
    with pytest.raises(ConfigError):
        sweep.optimize_wavelength(scenario, filter_width_nm=1.0, search_nm=(690.0, 710.0), step_nm=0.6)


def test_optimizer_checks_profile_coverage(dip_profile):
    scenario = Scenario(profile=dip_profile, profile_source=dip_profile.source, r0_m=0.5)
    with pytest.raises(OutOfRangeError):
        sweep.optimize_wavelength(scenario, filter_width_nm=1.0, search_nm=(600.0, 700.0))


def test_bandwidths_below_open_loop_floor_use_uncorrected_r0(site_scenario):
    coherence = turbulence.site_coherence(site_scenario.site, 1.0)
    floor = sweep.open_loop_floor(coherence, 1.0, config.TRACKING_BANDWIDTH_HZ)
    assert 10.0 < floor < 20.0

    spec = _spec(
        site_scenario, axis=SweepAxis.FC, minimum=5.0, maximum=200.0, points=6, spacing=Spacing.LOG,
        wavelengths_nm=(1549.91,), strategies=(FilterStrategy.TL,),
    )
    rows = sweep.run_sweep(spec, workers=1)
    below = [row for row in rows if row.axis_value < floor]
    above = [row for row in rows if row.axis_value >= floor]
    assert below and above
    for row in below:
        budget = row.entries[0].budget
        assert budget.r0_source == sweep.OPEN_LOOP_SOURCE
        assert budget.r0_m == pytest.approx(coherence["r0_m"])
        assert sweep.OPEN_LOOP_FLAG in budget.flags
    for row in above:
        budget = row.entries[0].budget
        assert budget.r0_source == "ao"
        assert budget.r0_m >= coherence["r0_m"] * (1.0 - 1e-9)
        assert sweep.OPEN_LOOP_FLAG not in budget.flags


def test_bundled_bandwidth_sweep_starts_above_floor():
    scenario = load_scenario(os.path.join(SCENARIOS, "ao_fc200.ini"))
    coherence = turbulence.site_coherence(scenario.site, scenario.link.receiver_diameter_m)
    floor = sweep.open_loop_floor(coherence, scenario.link.receiver_diameter_m, scenario.ao.tracking_bandwidth_hz)
    assert scenario.sweep.minimum >= floor


def test_bandwidth_axis_converges_to_dl_limit(winter_profile):
    """With tip/tilt residual negligible, a very fast loop reaches the S = 1 rate."""
    scenario = Scenario(
        profile=winter_profile, profile_source=winter_profile.source, site=SiteModel(),
        ao=AOParams(tracking_bandwidth_hz=1e6, bandwidth_hz=200.0),
    )
    spec = _spec(
        scenario, axis=SweepAxis.FC, minimum=1e3, maximum=1e7, points=3, spacing=Spacing.LOG,
        wavelengths_nm=(430.886,), strategies=(FilterStrategy.TL,),
    )
    rows = sweep.run_sweep(spec, workers=1)
    rates = [row.entries[0].r_kb_hz for row in rows]
    limit = rows[-1].entries[0].dl_limit_r_kb_hz
    assert limit > 0
    assert rates == sorted(rates)
    assert rates[-1] == pytest.approx(limit, rel=1e-4)


def test_optimizer_moves_to_narrow_dip_with_narrow_filter(winter_scenario):
    result = sweep.optimize_wavelength(winter_scenario, filter_width_nm=0.05, search_nm=(400.0, 440.0), step_nm=0.025)
    assert result.wavelength_nm == pytest.approx(405.0, abs=0.025)


def test_optimizer_is_stable_under_grid_refinement(dip_profile):
    scenario = Scenario(profile=dip_profile, profile_source=dip_profile.source, r0_m=0.5)
    coarse = sweep.optimize_wavelength(scenario, filter_width_nm=1.0, search_nm=(690.0, 710.0), step_nm=0.5)
    fine = sweep.optimize_wavelength(scenario, filter_width_nm=1.0, search_nm=(690.0, 710.0), step_nm=0.25)
    assert abs(fine.wavelength_nm - coarse.wavelength_nm) <= 0.5
    assert fine.r_kb_hz >= coarse.r_kb_hz
