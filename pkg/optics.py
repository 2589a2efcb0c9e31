"""Receiver-plane optics: spots, fields of view, Strehl and channel efficiency."""

import math
from typing import Dict, Optional

import config
import spectral
from errors import ConfigError
from models import FilterStrategy, LinkConfig, SpectralProfile
from turbulence import scale_fried


def _metres(wavelength_nm: float) -> float:
    return wavelength_nm * 1e-9


def dl_spot_diameter(cfg: LinkConfig, wavelength_nm: float) -> float:
    """Airy-disk diameter 2.44·λ·f/D_R in metres."""
    if cfg.focal_length_m is None:
        raise ConfigError("focal_length_m is required for physical spot diameters")
    return config.DL_SPOT_FACTOR * _metres(wavelength_nm) * cfg.focal_length_m / cfg.receiver_diameter_m


def strehl_uncorrected(receiver_diameter_m: float, fried_m: float) -> float:
    """S = [1 + (D_R/r)^(5/3)]^(-6/5); equals 1 for an infinite coherence length."""
    if not receiver_diameter_m > 0 or not fried_m > 0:
        raise ValueError("receiver diameter and Fried length must be positive")
    return (1.0 + (receiver_diameter_m / fried_m) ** (5.0 / 3.0)) ** (-6.0 / 5.0)


def tl_spot_diameter(cfg: LinkConfig, wavelength_nm: float, fried_m: float) -> float:
    return dl_spot_diameter(cfg, wavelength_nm) / math.sqrt(strehl_uncorrected(cfg.receiver_diameter_m, fried_m))


def tl_spot_diameter_from_opd(cfg: LinkConfig, wavelength_nm: float, opd_rms_m: float) -> float:
    """Spot broadened by a residual OPD instead of an uncorrected Fried length."""
    phase = opd_rms_m ** 2 * (2.0 * math.pi / _metres(wavelength_nm)) ** 2
    return dl_spot_diameter(cfg, wavelength_nm) * (1.0 + phase / config.RPE_COEFF) ** (3.0 / 5.0)


def dl_fov(receiver_diameter_m: float, wavelength_nm: float) -> float:
    """Diffraction-limited field of view π(1.22·λ/D_R)² in sr."""
    if not receiver_diameter_m > 0:
        raise ValueError("receiver diameter must be positive")
    return math.pi * (config.FOV_FACTOR * _metres(wavelength_nm) / receiver_diameter_m) ** 2


def tl_fov(receiver_diameter_m: float, wavelength_nm: float, r0_m: float) -> float:
    """Turbulence-limited field of view: the DL FOV divided by the Strehl ratio at r(λ)."""
    strehl = strehl_uncorrected(receiver_diameter_m, scale_fried(r0_m, wavelength_nm))
    return dl_fov(receiver_diameter_m, wavelength_nm) / strehl


def fov(strategy: FilterStrategy, receiver_diameter_m: float, wavelength_nm: float, r0_m: float) -> float:
    if strategy == FilterStrategy.TL:
        return tl_fov(receiver_diameter_m, wavelength_nm, r0_m)
    return dl_fov(receiver_diameter_m, wavelength_nm)


def beam_radius(cfg: LinkConfig, wavelength_nm: float) -> float:
    """Gaussian beam radius w(λ, z) at the receiver, waist w0 = 0.7·D_T/2."""
    w0 = config.BEAM_WAIST_FACTOR * cfg.transmitter_diameter_m / 2.0
    rayleigh_range = math.pi * w0 ** 2 / _metres(wavelength_nm)
    return w0 * math.sqrt(1.0 + (cfg.range_m / rayleigh_range) ** 2)


def geometric_coupling(cfg: LinkConfig, wavelength_nm: float) -> float:
    """Fraction of the transmitted Gaussian beam captured by the receiver aperture."""
    w = beam_radius(cfg, wavelength_nm)
    return -math.expm1(-0.5 * cfg.receiver_diameter_m ** 2 / w ** 2)


def field_stop_efficiency(strategy: FilterStrategy, strehl: float) -> float:
    if not 0 < strehl <= 1:
        raise ValueError(f"Strehl ratio must lie in (0, 1], got {strehl}")
    if strategy == FilterStrategy.TL:
        return config.AIRY_CORE_FRACTION
    return config.AIRY_CORE_FRACTION * strehl


def efficiency_breakdown(
    cfg: LinkConfig,
    profile: SpectralProfile,
    r0_m: float,
    wavelength_nm: float,
    strategy: Optional[FilterStrategy] = None,
) -> Dict[str, float]:
    """Every factor of the channel efficiency, plus the Strehl ratio and their product."""
    strategy = strategy or cfg.strategy
    strehl = strehl_uncorrected(cfg.receiver_diameter_m, scale_fried(r0_m, wavelength_nm))
    factors = {
        "strehl": strehl,
        "eta_geo": geometric_coupling(cfg, wavelength_nm),
        "eta_trans": spectral.value_at(profile, wavelength_nm, "transmission"),
        "eta_fs": field_stop_efficiency(strategy, strehl),
        "eta_spec": cfg.eta_spec,
        "eta_rec": cfg.eta_rec,
        "eta_det": cfg.eta_det,
    }
    factors["eta_total"] = (
        factors["eta_geo"] * factors["eta_trans"] * factors["eta_fs"]
        * factors["eta_spec"] * factors["eta_rec"] * factors["eta_det"]
    )
    return factors


def channel_efficiency(
    cfg: LinkConfig,
    profile: SpectralProfile,
    r0_m: float,
    wavelength_nm: float,
    strategy: Optional[FilterStrategy] = None,
) -> float:
    return efficiency_breakdown(cfg, profile, r0_m, wavelength_nm, strategy)["eta_total"]
