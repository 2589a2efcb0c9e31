import math

import pytest
from hypothesis import given, strategies as st

import ao
import optics
import turbulence
from errors import BracketDomainError
from models import AOParams, SiteModel


@pytest.mark.parametrize("preset, expected", [("fc130", 0.37), ("fc200", 0.50), ("fc500", 0.74)])
def test_effective_r0_for_presets(preset, expected):
    r0 = ao.effective_r0_closed_loop(ao.PRESETS[preset], 43.0, 301.0, 1.0, 500.0)
    assert r0 == pytest.approx(expected, abs=0.01)


def test_effective_r0_scales_with_wavelength():
    loop = ao.PRESETS["fc200"]
    at_500 = ao.effective_r0_closed_loop(loop, 43.0, 301.0, 1.0, 500.0)
    at_1000 = ao.effective_r0_closed_loop(loop, 43.0, 301.0, 1.0, 1000.0)
    assert at_1000 == pytest.approx(at_500 * 0.5 ** 1.2)


def test_open_loop_opd():
    assert ao.opd_rms_open_loop(0.05, 1.0) * 1e9 == pytest.approx(980.0, abs=2.0)


@pytest.mark.parametrize("preset, expected", [("fc130", 184.0), ("fc200", 144.0), ("fc500", 104.0)])
def test_closed_loop_opd_for_default_site(preset, expected):
    opd = ao.opd_rms_closed_loop(SiteModel(), ao.PRESETS[preset], 1.0)
    assert opd * 1e9 == pytest.approx(expected, abs=3.0)


@pytest.mark.parametrize("wavelength_nm, expected", [(1550.0, 0.71), (781.0, 0.37), (431.0, 0.14)])
def test_strehl_for_144nm_residual(wavelength_nm, expected):
    assert ao.strehl_from_opd(144e-9, wavelength_nm) == pytest.approx(expected, abs=0.01)


def test_strehl_opd_inverse():
    opd = ao.opd_from_strehl(0.4, 780.0)
    assert ao.strehl_from_opd(opd, 780.0) == pytest.approx(0.4, rel=1e-12)
    assert ao.opd_from_strehl(1.0, 780.0) == 0.0


def test_r0_opd_inverse():
    assert ao.r0_from_opd(ao.opd_rms_open_loop(0.12, 1.0), 1.0) == pytest.approx(0.12, rel=1e-12)
    assert math.isinf(ao.r0_from_opd(0.0, 1.0))


def test_opd_strehl_matches_uncorrected_strehl():
    opd = ao.opd_rms_open_loop(0.05, 1.0)
    assert ao.strehl_from_opd(opd, 500.0) == pytest.approx(optics.strehl_uncorrected(1.0, 0.05), rel=1e-9)


@pytest.mark.parametrize("wavelength_nm", [431.0, 781.0, 1550.0])
def test_opd_fov_matches_fried_fov(wavelength_nm):
    opd = ao.opd_rms_open_loop(0.3, 1.0)
    assert ao.tl_fov_from_opd(1.0, wavelength_nm, opd) == pytest.approx(
        optics.tl_fov(1.0, wavelength_nm, 0.3), rel=1e-9
    )


def test_open_loop_equivalent_bandwidth_round_trip():
    fc = ao.effective_fc_open_loop(0.1, 1.0, 500.0, 43.0, 301.0, 60.0)
    loop = AOParams(tracking_bandwidth_hz=60.0, bandwidth_hz=fc)
    assert ao.effective_r0_closed_loop(loop, 43.0, 301.0, 1.0, 500.0) == pytest.approx(0.1, rel=1e-9)


def test_open_loop_bracket_domain():
    with pytest.raises(BracketDomainError):
        ao.effective_fc_open_loop(100.0, 1.0, 500.0, 43.0, 301.0, 60.0)


def test_residual_error_conversion():
    residual = ao.residual_error(1.0, 500.0)
    assert math.sqrt(residual.opd_variance_m2) == pytest.approx(500e-9 / (2 * math.pi))


def test_presets_and_unknown_name():
    assert set(ao.PRESETS) == {"fc130", "fc200", "fc500"}
    assert ao.PRESETS["fc200"].tracking_bandwidth_hz == 60.0
    with pytest.raises(KeyError):
        AOParams.preset("fc999")


def test_closed_loop_r0_for_site():
    r0 = ao.closed_loop_r0_for_site(SiteModel(), ao.PRESETS["fc200"], 1.0)
    assert r0 == pytest.approx(0.50, abs=0.02)


@given(
    strehl=st.floats(min_value=1e-3, max_value=1.0),
    wavelength_nm=st.floats(min_value=300.0, max_value=2000.0),
)
def test_strehl_opd_round_trip(strehl, wavelength_nm):
    opd = ao.opd_from_strehl(strehl, wavelength_nm)
    assert ao.strehl_from_opd(opd, wavelength_nm) == pytest.approx(strehl, rel=1e-9)


@given(r0=st.floats(min_value=1e-3, max_value=10.0), diameter=st.floats(min_value=0.1, max_value=10.0))
def test_r0_opd_round_trip(r0, diameter):
    assert ao.r0_from_opd(ao.opd_rms_open_loop(r0, diameter), diameter) == pytest.approx(r0, rel=1e-9)


def test_effective_r0_at_open_loop_floor_equals_site_r0():
    site = SiteModel()
    f_g = turbulence.greenwood_frequency(site, 500.0)
    f_tg = turbulence.tracking_greenwood_frequency(site, 500.0, 1.0)
    r0 = turbulence.fried_length(site, 500.0)
    floor = ao.effective_fc_open_loop(r0, 1.0, 500.0, f_tg, f_g, 60.0)
    below = ao.effective_r0_closed_loop(AOParams(bandwidth_hz=0.7 * floor), f_tg, f_g, 1.0, 500.0)
    at_floor = ao.effective_r0_closed_loop(AOParams(bandwidth_hz=floor), f_tg, f_g, 1.0, 500.0)
    assert at_floor == pytest.approx(r0, rel=1e-9)
    assert below < r0


@pytest.mark.parametrize("field", ["bandwidth_hz", "tracking_bandwidth_hz"])
def test_effective_r0_increases_with_loop_bandwidth(field):
    values = [20.0, 60.0, 200.0, 1000.0]
    r0s = [
        ao.effective_r0_closed_loop(AOParams(**{"bandwidth_hz": 200.0, field: v}), 43.0, 301.0, 1.0, 500.0)
        for v in values
    ]
    assert all(a < b for a, b in zip(r0s, r0s[1:]))


def test_strehl_increases_with_wavelength():
    strehls = [ao.strehl_from_opd(144e-9, wl) for wl in (400.0, 431.0, 781.0, 1064.0, 1550.0)]
    assert all(a < b for a, b in zip(strehls, strehls[1:]))
