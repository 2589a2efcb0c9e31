"""Adaptive-optics performance algebra.

Residual wavefront error is carried either as a phase variance (rad², tied
to a wavelength) or as an OPD variance (m², wavelength independent). The
closed-loop budget has two terms: tip/tilt tracking and higher-order lag.
Greenwood inputs are taken at the wavelength passed alongside them; the
link engine always uses the 500-nm reference.
"""

import math
from typing import Dict

import config
from logger import get_logger
from errors import BracketDomainError
from models import AOParams, ResidualError, SiteModel
from turbulence import (
    GREENWOOD_COEFF,
    TRACKING_GREENWOOD_COEFF,
    greenwood_frequency,
    path_moment,
    tracking_greenwood_frequency,
)

logger = get_logger(__name__)

PRESETS: Dict[str, AOParams] = {name: AOParams.preset(name) for name in config.AO_PRESETS}


def _reference_length_m() -> float:
    """λ0/2π in metres."""
    return config.REFERENCE_WAVELENGTH_NM * 1e-9 / (2.0 * math.pi)


def _tracking_term(f_tg: float, f_tc: float) -> float:
    return (math.pi / 2.0 * f_tg / f_tc) ** 2


def rpe_open_loop(receiver_diameter_m: float, fried_m: float) -> float:
    """Uncorrected residual phase error 1.03·(D_R/r)^(5/3) in rad²."""
    return config.RPE_COEFF * (receiver_diameter_m / fried_m) ** (5.0 / 3.0)


def rpe_closed_loop(ao: AOParams, f_tg: float, f_g: float) -> float:
    """Closed-loop residual phase error in rad²: tracking plus higher-order terms."""
    return _tracking_term(f_tg, ao.tracking_bandwidth_hz) + (f_g / ao.bandwidth_hz) ** (5.0 / 3.0)


def residual_error(phase_variance_rad2: float, wavelength_nm: float) -> ResidualError:
    opd_variance = phase_variance_rad2 * (wavelength_nm * 1e-9 / (2.0 * math.pi)) ** 2
    return ResidualError(
        phase_variance_rad2=phase_variance_rad2,
        opd_variance_m2=opd_variance,
        wavelength_nm=wavelength_nm,
    )


def opd_rms_open_loop(r0_m: float, receiver_diameter_m: float) -> float:
    """RMS optical path difference in metres for an uncorrected aperture."""
    return math.sqrt(config.RPE_COEFF) * _reference_length_m() * (receiver_diameter_m / r0_m) ** (5.0 / 6.0)


def opd_rms_closed_loop(site: SiteModel, ao: AOParams, receiver_diameter_m: float) -> float:
    """RMS closed-loop OPD in metres, evaluated directly from the site's moment integrals."""
    higher_order = GREENWOOD_COEFF * ao.bandwidth_hz ** (-5.0 / 3.0) * path_moment(site, 5.0 / 3.0)
    tracking = (
        TRACKING_GREENWOOD_COEFF ** 2
        * (math.pi / 2.0) ** 2
        * ao.tracking_bandwidth_hz ** -2
        * receiver_diameter_m ** (-1.0 / 3.0)
        * path_moment(site, 2.0)
    )
    return math.sqrt(higher_order + tracking)


def effective_r0_closed_loop(
    ao: AOParams, f_tg: float, f_g: float, receiver_diameter_m: float, wavelength_nm: float
) -> float:
    """Fried length whose open-loop error matches the closed-loop residual.

    With 500-nm Greenwood frequencies and λ = 500 nm this is the
    500-referenced effective r0 used by the link budget.
    """
    rpe = rpe_closed_loop(ao, f_tg, f_g)
    if rpe <= 0:
        return math.inf
    return (
        config.RPE_COEFF ** (3.0 / 5.0)
        * (config.REFERENCE_WAVELENGTH_NM / wavelength_nm) ** (6.0 / 5.0)
        * receiver_diameter_m
        * rpe ** (-3.0 / 5.0)
    )


def closed_loop_r0_for_site(site: SiteModel, ao: AOParams, receiver_diameter_m: float) -> float:
    lam0 = config.REFERENCE_WAVELENGTH_NM
    f_g = greenwood_frequency(site, lam0)
    f_tg = tracking_greenwood_frequency(site, lam0, receiver_diameter_m)
    r0 = effective_r0_closed_loop(ao, f_tg, f_g, receiver_diameter_m, lam0)
    logger.info(
        f"AO f_tc={ao.tracking_bandwidth_hz:g} Hz, f_c={ao.bandwidth_hz:g} Hz: "
        f"f_G={f_g:.4g} Hz, f_TG={f_tg:.4g} Hz -> effective r0={r0:.4g} m"
    )
    return r0


def effective_fc_open_loop(
    r0_m: float,
    receiver_diameter_m: float,
    wavelength_nm: float,
    f_tg: float,
    f_g: float,
    f_tc: float,
) -> float:
    """Higher-order bandwidth at which closed loop does no better than open loop."""
    bracket = (
        config.RPE_COEFF
        * (receiver_diameter_m / r0_m) ** (5.0 / 3.0)
        * (config.REFERENCE_WAVELENGTH_NM / wavelength_nm) ** 2
        - _tracking_term(f_tg, f_tc)
    )
    if bracket <= 0:
        raise BracketDomainError(
            f"tracking residual {_tracking_term(f_tg, f_tc):.4g} rad² alone exceeds the open-loop "
            f"turbulence at r0={r0_m:g} m; no open-loop equivalent bandwidth exists"
        )
    return f_g * bracket ** (-3.0 / 5.0)


def strehl_from_opd(opd_rms_m: float, wavelength_nm: float) -> float:
    if opd_rms_m < 0:
        raise ValueError(f"OPD must be non-negative, got {opd_rms_m}")
    phase = opd_rms_m ** 2 * (2.0 * math.pi / (wavelength_nm * 1e-9)) ** 2
    return (1.0 + phase / config.RPE_COEFF) ** (-6.0 / 5.0)


def opd_from_strehl(strehl: float, wavelength_nm: float) -> float:
    """Inverse of strehl_from_opd."""
    if not 0 < strehl <= 1:
        raise ValueError(f"Strehl ratio must lie in (0, 1], got {strehl}")
    phase = config.RPE_COEFF * (strehl ** (-5.0 / 6.0) - 1.0)
    return wavelength_nm * 1e-9 / (2.0 * math.pi) * math.sqrt(max(phase, 0.0))


def r0_from_opd(opd_rms_m: float, receiver_diameter_m: float) -> float:
    """Inverse of opd_rms_open_loop; infinite for zero OPD."""
    if opd_rms_m <= 0:
        return math.inf
    return receiver_diameter_m * (config.RPE_COEFF * _reference_length_m() ** 2 / opd_rms_m ** 2) ** (3.0 / 5.0)


def tl_fov_from_opd(receiver_diameter_m: float, wavelength_nm: float, opd_rms_m: float) -> float:
    """Turbulence-limited field of view in sr for a residual OPD."""
    lam = wavelength_nm * 1e-9
    phase = opd_rms_m ** 2 * (2.0 * math.pi / lam) ** 2
    return math.pi * (config.FOV_FACTOR * lam / receiver_diameter_m * (1.0 + phase / config.RPE_COEFF) ** (3.0 / 5.0)) ** 2
