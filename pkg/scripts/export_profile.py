"""Export a spectral profile (built-in or CSV) as canonical Spectral CSV.

Usage:
    python -m scripts.export_profile builtin:synthetic-winter-zenith profiles/winter.csv
    python -m scripts.export_profile sky.csv sky_canonical.csv --unit W_cm2_sr_um
"""
import argparse
import os
import sys

# Add root to path so we can import spectral
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import spectral
from errors import FSQKDError
from logger import get_logger

logger = get_logger(__name__)


def export_profile(source: str, output: str, unit=None) -> int:
    # 1. Load (unit conversion happens in the loader)
    try:
        profile = spectral.load_profile(source, unit=unit)
    except FSQKDError as e:
        logger.error(f"Could not load profile {source}: {e}")
        return e.exit_code

    # 2. Write
    out_dir = os.path.dirname(output)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    with open(output, "w", encoding="utf-8", newline="") as f:
        spectral.write_profile(profile, f)

    first, last = profile.span_nm
    logger.info(f"Wrote {len(profile.wavelength_nm)} samples ({first:g}-{last:g} nm) to {output}")
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Export a spectral profile as Spectral CSV")
    parser.add_argument("source")
    parser.add_argument("output")
    parser.add_argument("--unit", help="Radiance unit of the input when its header has none")
    args = parser.parse_args()
    sys.exit(export_profile(args.source, args.output, args.unit))
