"""Atmospheric coherence from Cn² and wind profiles.

Everything here reduces to one altitude moment integral,
sec(θz)·∫ Cn²(h)·v_w(h)^p dh, taken at p = 0 (Fried length), p = 5/3
(Greenwood frequency) and p = 2 (tracking Greenwood frequency).
"""

import math
from typing import Dict, Optional

import numpy as np
from scipy import integrate

import config
from errors import OutOfRangeError
from logger import get_logger
from models import HV57Profile, SiteModel, TabulatedCn2Profile, WindModel

logger = get_logger(__name__)

FRIED_COEFF = 0.423
GREENWOOD_COEFF = 0.1022
TRACKING_GREENWOOD_COEFF = 5.268e-2


def cn2_at(profile, altitude_m):
    """Cn²(h) in m^-2/3 for an HV5/7 or tabulated profile; vectorized over h."""
    h = np.asarray(altitude_m, dtype=float)
    if np.any(h < 0):
        raise OutOfRangeError(f"altitude must be non-negative, got {np.min(h):g} m")

    if isinstance(profile, HV57Profile):
        values = profile.scale * (
            0.00594 * (profile.rms_wind / 27.0) ** 2 * (1e-5 * h) ** 10 * np.exp(-h / 1000.0)
            + 2.7e-16 * np.exp(-h / 1500.0)
            + profile.ground_strength * np.exp(-h / 100.0)
        )
    elif isinstance(profile, TabulatedCn2Profile):
        # Held below the first node, zero above the last
        values = np.interp(h, profile.altitude_m, profile.cn2, left=profile.cn2[0], right=0.0)
    else:
        raise TypeError(f"Unsupported Cn² profile type: {type(profile).__name__}")
    return float(values) if values.ndim == 0 else values


def wind_speed(wind: WindModel, altitude_m):
    """Slew-augmented Bufton wind speed v_w(h) in m/s."""
    h = np.asarray(altitude_m, dtype=float)
    values = (
        wind.slew_rate * h
        + wind.ground_speed
        + wind.bufton_peak * np.exp(-(((h - wind.bufton_center_m) / wind.bufton_width_m) ** 2))
    )
    return float(values) if values.ndim == 0 else values


def path_moment(site: SiteModel, exponent: float, intervals: Optional[int] = None) -> float:
    """sec(θz)·∫₀ᵃ Cn²(h)·v_w(h)^exponent dh.

    Composite Simpson on a log-spaced grid from the quadrature floor to
    min(source altitude, ceiling); the thin slab below the floor is added
    with the trapezoid rule.
    """
    n = intervals or site.quadrature_intervals
    n += n % 2
    top = min(site.source_altitude_m, config.QUADRATURE_CEILING_M)
    floor = min(config.QUADRATURE_FLOOR_M, top)

    def integrand(h):
        return cn2_at(site.cn2, h) * wind_speed(site.wind, h) ** exponent

    slab_h = np.array([0.0, floor])
    total = integrate.trapezoid(integrand(slab_h), x=slab_h)
    if top > floor:
        log_h = np.linspace(math.log(floor), math.log(top), n + 1)
        h = np.exp(log_h)
        # dh = h·d(ln h)
        total += integrate.simpson(integrand(h) * h, x=log_h)
    return float(total) / math.cos(site.zenith_angle_rad)


def _wavenumber(wavelength_nm: float) -> float:
    if not wavelength_nm > 0:
        raise ValueError(f"wavelength must be positive, got {wavelength_nm}")
    return 2.0 * math.pi / (wavelength_nm * 1e-9)


def fried_length(site: SiteModel, wavelength_nm: float, intervals: Optional[int] = None) -> float:
    """Fried length r(λ) in metres; infinite for a turbulence-free path."""
    k = _wavenumber(wavelength_nm)
    moment = path_moment(site, 0.0, intervals)
    if moment <= 0:
        return math.inf
    return (FRIED_COEFF * k ** 2 * moment) ** (-3.0 / 5.0)


def greenwood_frequency(site: SiteModel, wavelength_nm: float, intervals: Optional[int] = None) -> float:
    k = _wavenumber(wavelength_nm)
    moment = path_moment(site, 5.0 / 3.0, intervals)
    return (GREENWOOD_COEFF * k ** 2 * moment) ** (3.0 / 5.0)


def tracking_greenwood_frequency(
    site: SiteModel, wavelength_nm: float, receiver_diameter_m: float, intervals: Optional[int] = None
) -> float:
    if not receiver_diameter_m > 0:
        raise ValueError(f"receiver diameter must be positive, got {receiver_diameter_m}")
    k = _wavenumber(wavelength_nm)
    moment = path_moment(site, 2.0, intervals)
    return TRACKING_GREENWOOD_COEFF * receiver_diameter_m ** (-1.0 / 6.0) * k * math.sqrt(moment)


def scale_fried(r0_m: float, wavelength_nm: float) -> float:
    """r(λ) = r0·(λ/λ0)^(6/5), with r0 referenced to 500 nm."""
    if not r0_m > 0:
        raise ValueError(f"r0 must be positive, got {r0_m}")
    return r0_m * (wavelength_nm / config.REFERENCE_WAVELENGTH_NM) ** (6.0 / 5.0)


def site_coherence(site: SiteModel, receiver_diameter_m: float) -> Dict[str, float]:
    """r0, f_G and f_TG at the 500-nm reference wavelength."""
    lam0 = config.REFERENCE_WAVELENGTH_NM
    summary = {
        "r0_m": fried_length(site, lam0),
        "greenwood_hz": greenwood_frequency(site, lam0),
        "tracking_greenwood_hz": tracking_greenwood_frequency(site, lam0, receiver_diameter_m),
    }
    logger.info(
        f"Site coherence at {lam0:g} nm: r0={summary['r0_m']:.4g} m, "
        f"f_G={summary['greenwood_hz']:.4g} Hz, f_TG={summary['tracking_greenwood_hz']:.4g} Hz"
    )
    return summary
