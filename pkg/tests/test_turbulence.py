import math

import numpy as np
import pytest

import turbulence
from errors import OutOfRangeError
from models import HV57Profile, SiteModel, TabulatedCn2Profile, WindModel


@pytest.fixture(scope="module")
def site():
    return SiteModel()


def test_hv57_ground_value():
    assert turbulence.cn2_at(HV57Profile(), 0.0) == pytest.approx(1.7e-14 + 2.7e-16)


def test_hv57_scale_multiplies_profile():
    h = np.array([0.0, 500.0, 12000.0])
    base = turbulence.cn2_at(HV57Profile(), h)
    doubled = turbulence.cn2_at(HV57Profile(scale=2.0), h)
    np.testing.assert_allclose(doubled, 2.0 * base)


def test_negative_altitude_rejected():
    with pytest.raises(OutOfRangeError):
        turbulence.cn2_at(HV57Profile(), -1.0)


def test_tabulated_profile_interpolation():
    table = TabulatedCn2Profile(altitude_m=(100.0, 1100.0), cn2=(2e-15, 1e-15))
    assert turbulence.cn2_at(table, 0.0) == pytest.approx(2e-15)
    assert turbulence.cn2_at(table, 600.0) == pytest.approx(1.5e-15)
    assert turbulence.cn2_at(table, 5000.0) == 0.0


def test_wind_speed_at_ground():
    wind = WindModel(slew_rate=0.01)
    expected = 5.0 + 30.0 * math.exp(-((9400.0 / 4800.0) ** 2))
    assert turbulence.wind_speed(wind, 0.0) == pytest.approx(expected)
    assert turbulence.wind_speed(wind, 1000.0) == pytest.approx(
        10.0 + 5.0 + 30.0 * math.exp(-((8400.0 / 4800.0) ** 2))
    )


def test_slew_rate_for_leo_orbit():
    wind = WindModel.for_circular_orbit(600e3)
    # ~7.56 km/s over 600 km
    assert wind.slew_rate == pytest.approx(0.0126, rel=0.01)


def test_default_site_coherence(site):
    summary = turbulence.site_coherence(site, 1.0)
    assert summary["r0_m"] == pytest.approx(0.0496, rel=0.03)
    assert summary["greenwood_hz"] == pytest.approx(300.0, rel=0.05)
    assert summary["tracking_greenwood_hz"] == pytest.approx(43.3, rel=0.05)


def test_moment_scales_with_secant_zenith(site):
    slanted = site.model_copy(update={"zenith_angle_rad": math.pi / 3})
    for exponent in (0.0, 5.0 / 3.0, 2.0):
        assert turbulence.path_moment(slanted, exponent) == pytest.approx(
            2.0 * turbulence.path_moment(site, exponent), rel=1e-12
        )


def test_fried_length_wavelength_scaling(site):
    r_500 = turbulence.fried_length(site, 500.0)
    r_1000 = turbulence.fried_length(site, 1000.0)
    assert r_1000 == pytest.approx(r_500 * 2.0 ** 1.2, rel=1e-12)
    assert turbulence.scale_fried(r_500, 1000.0) == pytest.approx(r_1000, rel=1e-12)


def test_constant_table_integrates_exactly():
    table = TabulatedCn2Profile(altitude_m=(0.0, 10000.0), cn2=(1e-15, 1e-15))
    site = SiteModel(cn2=table, source_altitude_m=10000.0)
    assert turbulence.path_moment(site, 0.0) == pytest.approx(1e-11, rel=1e-6)


def test_quadrature_converges(site):
    coarse = turbulence.greenwood_frequency(site, 500.0, intervals=1024)
    fine = turbulence.greenwood_frequency(site, 500.0, intervals=4096)
    assert fine == pytest.approx(coarse, rel=1e-3)


def test_odd_interval_count_is_rounded_up():
    assert SiteModel(quadrature_intervals=101).quadrature_intervals == 102


def test_turbulence_free_path_has_infinite_fried_length():
    calm = SiteModel(cn2=HV57Profile(scale=0.0))
    assert math.isinf(turbulence.fried_length(calm, 500.0))


def test_scale_fried_requires_positive_r0():
    with pytest.raises(ValueError):
        turbulence.scale_fried(0.0, 500.0)


@pytest.mark.parametrize("stronger", [
    HV57Profile(scale=2.0),
    HV57Profile(ground_strength=5e-14),
    HV57Profile(rms_wind=30.0),
])
def test_added_turbulence_shortens_coherence(site, stronger):
    base = turbulence.site_coherence(site, 1.0)
    worse = turbulence.site_coherence(site.model_copy(update={"cn2": stronger}), 1.0)
    assert worse["r0_m"] < base["r0_m"]
    assert worse["greenwood_hz"] > base["greenwood_hz"]
    assert worse["tracking_greenwood_hz"] > base["tracking_greenwood_hz"]
