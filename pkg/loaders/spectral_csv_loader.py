from typing import Optional, Union

from errors import ConfigError, ProfileFormatError
from loaders.base import BaseLoader
from loaders.utils import TextSource, find_unit_tag, first_violation, read_numeric_table, read_source
from logger import get_logger
from models import RadianceUnit, SpectralProfile

logger = get_logger(__name__)

SPECTRAL_COLUMNS = ["wavelength_nm", "transmission", "radiance"]


def parse_unit(tag: Union[str, RadianceUnit]) -> RadianceUnit:
    if isinstance(tag, RadianceUnit):
        return tag
    try:
        return RadianceUnit(tag)
    except ValueError:
        allowed = [u.value for u in RadianceUnit]
        raise ConfigError(f"Unknown radiance unit '{tag}'. Allowed: {allowed}")


class SpectralCsvLoader(BaseLoader):
    """Loads `wavelength_nm,transmission,radiance` CSV files.

    The radiance unit comes from the `# unit=` header line or from the
    caller. An explicit unit wins over the header; a mismatch is logged.
    """

    def load(self, source: TextSource, unit: Optional[Union[str, RadianceUnit]] = None) -> SpectralProfile:
        text, label = read_source(source)

        header_tag = find_unit_tag(text)
        header_unit = parse_unit(header_tag) if header_tag is not None else None
        declared = parse_unit(unit) if unit is not None else None

        if declared is None and header_unit is None:
            raise ConfigError(f"{label}: no radiance unit declared (add '# unit=<tag>' or pass a unit)")
        if declared is not None and header_unit is not None and declared != header_unit:
            logger.warning(
                f"{label}: header declares unit {header_unit.value}, overridden by {declared.value}"
            )
        resolved = declared or header_unit

        frame, lines = read_numeric_table(text, SPECTRAL_COLUMNS, label)
        if len(frame) < 2:
            raise ProfileFormatError("a spectral profile needs at least 2 rows", source=label)

        # 1. Row-level checks, so errors can name the line
        wl = frame["wavelength_nm"]
        line = first_violation(wl.diff().iloc[1:] <= 0, lines[1:])
        if line is not None:
            raise ProfileFormatError("wavelengths must be strictly increasing", line=line, source=label)
        line = first_violation(wl <= 0, lines)
        if line is not None:
            raise ProfileFormatError("wavelength must be positive", line=line, source=label)

        tr = frame["transmission"]
        line = first_violation((tr < 0) | (tr > 1), lines)
        if line is not None:
            raise ProfileFormatError("transmission outside [0, 1]", line=line, source=label)

        rad = frame["radiance"]
        line = first_violation(rad < 0, lines)
        if line is not None:
            raise ProfileFormatError("negative radiance", line=line, source=label)

        # 2. Convert to the canonical unit
        profile = SpectralProfile(
            wavelength_nm=wl.to_numpy(),
            transmission=tr.to_numpy(),
            radiance=rad.to_numpy() * resolved.to_canonical,
            source=label,
            input_unit=resolved,
        )
        lo, hi = profile.span_nm
        logger.info(f"Loaded spectral profile {label}: {len(frame)} samples, {lo:g}-{hi:g} nm, unit {resolved.value}")
        return profile
