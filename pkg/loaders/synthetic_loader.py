"""Bundled synthetic spectral profiles.

These stand in for proprietary radiative-transfer output so every workflow
runs out of the box. Radiance is in W·m⁻²·sr⁻¹·nm⁻¹.
"""

from functools import partial
from typing import Callable, Dict

import numpy as np

from errors import ConfigError
from loaders.base import BaseLoader
from logger import get_logger
from models import RadianceUnit, SpectralProfile

logger = get_logger(__name__)

BUILTIN_PREFIX = "builtin:"


def _gaussian_dip(wavelength_nm: np.ndarray, center_nm: float, sigma_nm: float, depth: float) -> np.ndarray:
    return 1.0 - depth * np.exp(-0.5 * ((wavelength_nm - center_nm) / sigma_nm) ** 2)


def _grid(*segments) -> np.ndarray:
    """Union of arange segments (start, stop, step), deduplicated."""
    parts = [np.arange(start, stop + step / 2, step) for start, stop, step in segments]
    return np.unique(np.round(np.concatenate(parts), 6))


# Aerosol extinction above the 50 km baseline follows Koschmieder (3.912/V per
# km) over a 1 km scale height, with an Angstrom exponent of 1.
BASELINE_VISIBILITY_KM = 50.0
HAZE_SCALE_HEIGHT_KM = 1.0
HAZE_RADIANCE = 1.2
SEASON_BRIGHTNESS = {"winter": 1.0, "summer": 3.0}


def haze_depth(visibility_km: float) -> float:
    """Excess aerosol optical depth at 550 nm relative to the 50 km baseline."""
    return 3.912 * HAZE_SCALE_HEIGHT_KM * (1.0 / visibility_km - 1.0 / BASELINE_VISIBILITY_KM)


def synthetic_zenith(season: str = "winter", visibility_km: float = BASELINE_VISIBILITY_KM) -> SpectralProfile:
    """λ⁻⁴ sky continuum with a broad dip at 431 nm and a narrow deep dip at 405 nm.

    Lower visibility adds haze: transmission drops and a flatter (λ^-1.5)
    scattered component raises the radiance, more so at long wavelengths in
    relative terms. Summer scales the whole sky by the season brightness.
    """
    if season not in SEASON_BRIGHTNESS:
        raise ConfigError(f"Unknown season '{season}'. Allowed: {list(SEASON_BRIGHTNESS)}")
    if not 0 < visibility_km <= BASELINE_VISIBILITY_KM:
        raise ConfigError(f"visibility must lie in (0, {BASELINE_VISIBILITY_KM:g}] km, got {visibility_km}")

    wl = _grid(
        (395.0, 1700.0, 0.5),
        (425.0, 437.0, 0.05),
        (404.5, 405.5, 0.005),
    )
    haze = haze_depth(visibility_km)
    transmission = np.exp(-(0.05 * (550.0 / wl) ** 4 + 0.05 + haze * 550.0 / wl))
    continuum = 0.7 * (431.0 / wl) ** 4 + HAZE_RADIANCE * haze * (431.0 / wl) ** 1.5
    radiance = (
        SEASON_BRIGHTNESS[season]
        * continuum
        * _gaussian_dip(wl, 431.0, 1.5, 0.8)
        * _gaussian_dip(wl, 405.0, 0.05, 0.99)
    )
    name = f"synthetic-{season}-zenith"
    if visibility_km != BASELINE_VISIBILITY_KM:
        name += f"-{visibility_km:g}km"
    return SpectralProfile(
        wavelength_nm=wl,
        transmission=transmission,
        radiance=radiance,
        source=f"{BUILTIN_PREFIX}{name}",
        input_unit=RadianceUnit.W_M2_SR_NM,
    )


def synthetic_winter_zenith() -> SpectralProfile:
    return synthetic_zenith("winter", BASELINE_VISIBILITY_KM)


def flat_single_dip(
    center_nm: float = 700.0,
    sigma_nm: float = 2.0,
    depth: float = 0.95,
    radiance: float = 0.3,
    transmission: float = 0.9,
    span_nm: tuple = (600.0, 800.0),
    step_nm: float = 0.1,
) -> SpectralProfile:
    """Flat radiance and transmission with one Gaussian radiance dip."""
    wl = _grid((span_nm[0], span_nm[1], step_nm))
    return SpectralProfile(
        wavelength_nm=wl,
        transmission=np.full_like(wl, transmission),
        radiance=radiance * _gaussian_dip(wl, center_nm, sigma_nm, depth),
        source=f"{BUILTIN_PREFIX}flat-single-dip",
        input_unit=RadianceUnit.W_M2_SR_NM,
    )


BUILTIN_PROFILES: Dict[str, Callable[..., SpectralProfile]] = {
    "synthetic-winter-zenith": synthetic_winter_zenith,
    "synthetic-winter-zenith-23km": partial(synthetic_zenith, "winter", 23.0),
    "synthetic-winter-zenith-5km": partial(synthetic_zenith, "winter", 5.0),
    "synthetic-summer-zenith": partial(synthetic_zenith, "summer", 50.0),
    "synthetic-summer-zenith-23km": partial(synthetic_zenith, "summer", 23.0),
    "flat-single-dip": flat_single_dip,
}


class SyntheticLoader(BaseLoader):
    """Resolves `builtin:<name>` references to generated profiles."""

    def load(self, source: str, **options) -> SpectralProfile:
        name = source[len(BUILTIN_PREFIX):] if source.startswith(BUILTIN_PREFIX) else source
        if name not in BUILTIN_PROFILES:
            raise ConfigError(f"Unknown built-in profile '{name}'. Allowed: {sorted(BUILTIN_PROFILES)}")
        profile = BUILTIN_PROFILES[name](**options)
        logger.info(f"Generated built-in profile {name}: {len(profile.wavelength_nm)} samples")
        return profile
