"""Spectral profile access: loading, interpolation and band integrals."""

from typing import Callable, IO, Literal, Optional, Union

import numpy as np
import pandas as pd
from scipy import constants

import config
from errors import OutOfRangeError
from loaders import get_profile_loader
from logger import get_logger
from models import RadianceUnit, SpectralProfile

logger = get_logger(__name__)

Weight = Callable[[np.ndarray], np.ndarray]


def load_profile(source, unit: Optional[Union[str, RadianceUnit]] = None) -> SpectralProfile:
    """Loads a Spectral CSV (path or stream) or a `builtin:<name>` profile.

    Radiance is converted to W·m⁻²·sr⁻¹·nm⁻¹.
    """
    loader = get_profile_loader(source)
    if unit is None:
        return loader.load(source)
    return loader.load(source, unit=unit)


def _check_range(profile: SpectralProfile, lo: float, hi: float, what: str) -> None:
    first, last = profile.span_nm
    if lo < first or hi > last:
        raise OutOfRangeError(
            f"{what} [{lo:g}, {hi:g}] nm is outside the tabulated range [{first:g}, {last:g}] nm of {profile.source}"
        )


def value_at(profile: SpectralProfile, wavelength_nm, which: Literal["transmission", "radiance"] = "radiance"):
    """Linearly interpolated transmission or radiance at one or more wavelengths."""
    if which not in ("transmission", "radiance"):
        raise ValueError(f"which must be 'transmission' or 'radiance', got '{which}'")
    wl = np.asarray(wavelength_nm, dtype=float)
    _check_range(profile, float(np.min(wl)), float(np.max(wl)), "wavelength")
    values = np.interp(wl, profile.wavelength_nm, getattr(profile, which))
    return float(values) if values.ndim == 0 else values


def photon_weight(wavelength_nm):
    """λ/(4hc) in photons per joule, with λ given in nm."""
    return np.asarray(wavelength_nm, dtype=float) * 1e-9 / (4.0 * constants.h * constants.c)


def radiance_band_integral(
    profile: SpectralProfile,
    center_nm: float,
    width_nm: float,
    weight: Optional[Weight] = None,
) -> float:
    """∫ weight(λ)·H_b(λ) dλ over the notch [center ± width/2].

    Radiance is piecewise linear between the union of data nodes and notch
    endpoints. Each sub-interval uses Simpson's rule with the interpolated
    midpoint, which is exact for a linear weight and reduces to the trapezoid
    rule for a constant one.
    """
    if not width_nm > 0:
        raise ValueError(f"notch width must be positive, got {width_nm}")
    lo, hi = center_nm - width_nm / 2.0, center_nm + width_nm / 2.0
    _check_range(profile, lo, hi, "notch")

    wl = profile.wavelength_nm
    inner = wl[(wl > lo) & (wl < hi)]
    nodes = np.concatenate(([lo], inner, [hi]))
    mids = 0.5 * (nodes[:-1] + nodes[1:])

    h_nodes = np.interp(nodes, wl, profile.radiance)
    h_mids = 0.5 * (h_nodes[:-1] + h_nodes[1:])
    if weight is not None:
        f_nodes = h_nodes * np.asarray(weight(nodes), dtype=float)
        f_mids = h_mids * np.asarray(weight(mids), dtype=float)
    else:
        f_nodes, f_mids = h_nodes, h_mids

    steps = np.diff(nodes)
    return float(np.sum(steps * (f_nodes[:-1] + 4.0 * f_mids + f_nodes[1:]) / 6.0))


def profile_frame(profile: SpectralProfile) -> pd.DataFrame:
    return pd.DataFrame({
        "wavelength_nm": profile.wavelength_nm,
        "transmission": profile.transmission,
        "radiance": profile.radiance,
    })


def write_profile(profile: SpectralProfile, stream: IO[str]) -> None:
    """Writes a profile as Spectral CSV in the canonical radiance unit."""
    stream.write(f"# unit={RadianceUnit.W_M2_SR_NM.value}\n")
    stream.write(f"# source={profile.source}\n")
    profile_frame(profile).to_csv(
        stream, index=False, float_format=f"%.{config.CSV_SIGNIFICANT_DIGITS}g", lineterminator="\n"
    )
