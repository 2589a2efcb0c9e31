import os

from .base import BaseLoader
from .cn2_csv_loader import Cn2CsvLoader
from .spectral_csv_loader import SpectralCsvLoader
from .synthetic_loader import BUILTIN_PREFIX, SyntheticLoader
from logger import get_logger

logger = get_logger(__name__)


def get_profile_loader(source) -> BaseLoader:
    """Factory: returns the SyntheticLoader for `builtin:` references.

    Anything else (a path or an open stream) goes to the SpectralCsvLoader.
    """
    if isinstance(source, (str, os.PathLike)) and os.fspath(source).startswith(BUILTIN_PREFIX):
        logger.debug(f" [Factory] returning Synthetic Loader for {source}")
        return SyntheticLoader()
    return SpectralCsvLoader()


__all__ = [
    "BaseLoader",
    "Cn2CsvLoader",
    "SpectralCsvLoader",
    "SyntheticLoader",
    "BUILTIN_PREFIX",
    "get_profile_loader",
]
