import io
import os
import re
from typing import List, Optional, Tuple, Union, IO

import pandas as pd

from errors import ConfigError, ProfileFormatError
from logger import get_logger

logger = get_logger(__name__)

TextSource = Union[str, os.PathLike, IO[str], IO[bytes]]

_UNIT_HEADER = re.compile(r"^#\s*unit\s*=\s*(\S+)\s*$", re.IGNORECASE)


def read_source(source: TextSource) -> Tuple[str, str]:
    """Returns (text, label) for a path or an open text/byte stream.

    Byte streams are decoded as UTF-8 (a leading BOM is tolerated) and
    CRLF line endings are normalized.
    """
    if isinstance(source, (str, os.PathLike)):
        path = os.fspath(source)
        if not os.path.exists(path):
            raise ConfigError(f"Profile file not found: {path}")
        with open(path, "rb") as f:
            raw = f.read()
        label = path
    else:
        raw = source.read()
        label = getattr(source, "name", "<stream>")
        if not isinstance(label, str):
            label = "<stream>"

    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8-sig")
        except UnicodeDecodeError as e:
            raise ProfileFormatError(f"not valid UTF-8 ({e})", source=label) from e
    else:
        text = raw.lstrip("\ufeff")
    return text.replace("\r\n", "\n").replace("\r", "\n"), label


def find_unit_tag(text: str) -> Optional[str]:
    """Returns the value of the first `# unit=<tag>` comment line, if any."""
    for line in text.split("\n"):
        match = _UNIT_HEADER.match(line.strip())
        if match:
            return match.group(1)
    return None


def read_numeric_table(text: str, columns: List[str], label: str) -> Tuple[pd.DataFrame, List[int]]:
    """Parses a commented CSV with a fixed header into a float DataFrame.

    Returns the frame plus the 1-based source line number of every data row,
    so validation errors can point at the offending line.
    """
    kept: List[Tuple[int, str]] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        kept.append((lineno, stripped))

    if not kept:
        raise ProfileFormatError("no header row found", source=label)

    header_line, header = kept[0]
    found = [c.strip() for c in header.split(",")]
    if found != columns:
        raise ProfileFormatError(
            f"expected header '{','.join(columns)}', found '{header}'",
            line=header_line, source=label,
        )

    rows = kept[1:]
    if not rows:
        raise ProfileFormatError("no data rows", source=label)
    line_numbers = [n for n, _ in rows]

    for lineno, content in rows:
        if content.count(",") != len(columns) - 1:
            raise ProfileFormatError(
                f"expected {len(columns)} comma-separated fields", line=lineno, source=label
            )

    body = "\n".join(content for _, content in rows)
    raw = pd.read_csv(io.StringIO(body), header=None, names=columns, dtype=str, skipinitialspace=True)
    frame = raw.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))

    bad = frame.isna().any(axis=1)
    if bad.any():
        idx = int(bad.to_numpy().nonzero()[0][0])
        raise ProfileFormatError(
            f"could not parse numeric values from '{rows[idx][1]}'",
            line=line_numbers[idx], source=label,
        )
    return frame.astype(float), line_numbers


def first_violation(mask, line_numbers: List[int]) -> Optional[int]:
    """Line number of the first True entry of a boolean row mask."""
    hits = mask.to_numpy().nonzero()[0] if hasattr(mask, "to_numpy") else mask.nonzero()[0]
    if len(hits) == 0:
        return None
    return line_numbers[int(hits[0])]
