"""Centralized configuration for the FSQKD link engine.

Loads environment variables (from the OS and optionally .env) and exposes
typed constants for use across the codebase. The physical defaults describe
the reference daytime scenario: a 10-cm transmitter in a 600-km LEO pass
down-linking to a 1-m ground receiver through an HV5/7 atmosphere.
Scenario files and CLI flags layer their values over these defaults without
rebinding them.
The one value rebound at runtime is LOG_FORMAT, which `--log-format`
replaces through logger.set_format.
"""

import os
try:
    from dotenv import load_dotenv  # type: ignore
except ImportError:
    load_dotenv = None

# Load environment variables from a local .env if present
if load_dotenv:
    load_dotenv()

# Reference wavelength for r0, Greenwood frequencies and OPD conversions (nm)
REFERENCE_WAVELENGTH_NM = 500.0

# Transmitter / receiver geometry
TRANSMITTER_DIAMETER_M = 0.10
RECEIVER_DIAMETER_M = 1.0
RANGE_M = 600e3
SIGNAL_WAVELENGTH_NM = 430.886

# Receiver chain
ETA_SPEC = 0.9
ETA_REC = 0.5
ETA_DET = 0.8
DARK_COUNT_HZ = 10.0
GATE_WINDOW_S = 1e-9
FILTER_WIDTH_NM = 1.0

# Decoy-state BB84
PULSE_RATE_HZ = 10e6
MU = 0.7
NU = 0.1
E0 = 0.5
E_D = 0.01
F_EC = 1.22
DECOY_FRACTION = 0.3

# Optics constants
AIRY_CORE_FRACTION = 0.84
DL_SPOT_FACTOR = 2.44
FOV_FACTOR = 1.22
BEAM_WAIST_FACTOR = 0.7
RPE_COEFF = 1.03

# Turbulence (HV5/7 + Bufton wind)
HV_GROUND_STRENGTH = 1.7e-14
HV_RMS_WIND = 21.0
BUFTON_PEAK = 30.0
BUFTON_CENTER_M = 9400.0
BUFTON_WIDTH_M = 4800.0
GROUND_WIND = 5.0
ORBIT_ALTITUDE_M = 600e3
EARTH_GM = 3.986004418e14
EARTH_RADIUS_M = 6.371e6

# Altitude quadrature
QUADRATURE_INTERVALS = int(os.getenv("FSQKD_QUAD_INTERVALS", "2048"))
QUADRATURE_FLOOR_M = 1.0
QUADRATURE_CEILING_M = 50e3

# Adaptive optics
TRACKING_BANDWIDTH_HZ = 60.0
AO_PRESETS = {
    "fc130": 130.0,
    "fc200": 200.0,
    "fc500": 500.0,
}

# Monte Carlo
MC_PULSES = 10_000_000
MC_BLOCK_PULSES = 1 << 20
MC_SEED = 20201015

# Sweeps / optimizer
SWEEP_POINTS = 50
OPTIMIZER_SEARCH_NM = (400.0, 1600.0)

# Output
CSV_SIGNIFICANT_DIGITS = 9
REPORT_PATH = "evals/report_latest.json"

# Bundled spectral profile used when a scenario names none
DEFAULT_PROFILE = "builtin:synthetic-winter-zenith"

# Logging
# Valid values: "JSON" (default), "HUMAN"
LOG_FORMAT = os.getenv("LOG_FORMAT", "JSON").upper()
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()


def sweep_threads() -> int:
    """Worker cap for sweeps, read from FSQKD_THREADS at call time."""
    raw = os.getenv("FSQKD_THREADS", "")
    try:
        value = int(raw)
    except ValueError:
        value = os.cpu_count() or 1
    return max(1, value)
