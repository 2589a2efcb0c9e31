from errors import ProfileFormatError
from loaders.base import BaseLoader
from loaders.utils import TextSource, first_violation, read_numeric_table, read_source
from logger import get_logger
from models import TabulatedCn2Profile

logger = get_logger(__name__)

CN2_COLUMNS = ["altitude_m", "cn2"]


class Cn2CsvLoader(BaseLoader):
    """Loads `altitude_m,cn2` turbulence tables."""

    def load(self, source: TextSource) -> TabulatedCn2Profile:
        text, label = read_source(source)
        frame, lines = read_numeric_table(text, CN2_COLUMNS, label)
        if len(frame) < 2:
            raise ProfileFormatError("a Cn² table needs at least 2 rows", source=label)

        alt = frame["altitude_m"]
        line = first_violation(alt < 0, lines)
        if line is not None:
            raise ProfileFormatError("negative altitude", line=line, source=label)
        line = first_violation(alt.diff().iloc[1:] <= 0, lines[1:])
        if line is not None:
            raise ProfileFormatError("altitudes must be strictly increasing", line=line, source=label)
        line = first_violation(frame["cn2"] < 0, lines)
        if line is not None:
            raise ProfileFormatError("negative Cn²", line=line, source=label)

        logger.info(f"Loaded Cn² table {label}: {len(frame)} rows up to {alt.iloc[-1]:g} m")
        return TabulatedCn2Profile(
            altitude_m=tuple(alt.tolist()),
            cn2=tuple(frame["cn2"].tolist()),
            source=label,
        )
