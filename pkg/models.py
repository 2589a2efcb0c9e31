"""Typed domain models shared across the link engine.

All models are frozen pydantic models: invariants are checked once at
construction and instances are safe to share between sweep workers.
"""

import math
from enum import Enum
from typing import Annotated, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

import config


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# --- Spectral ---

class RadianceUnit(str, Enum):
    """Declared radiance unit of an ingested spectral file."""
    W_M2_SR_NM = "W_m2_sr_nm"
    W_CM2_SR_UM = "W_cm2_sr_um"

    @property
    def to_canonical(self) -> float:
        """Multiplier converting this unit to W·m⁻²·sr⁻¹·nm⁻¹."""
        # 1e4 cm^-2 -> m^-2, 1e-3 um^-1 -> nm^-1
        return {"W_m2_sr_nm": 1.0, "W_cm2_sr_um": 10.0}[self.value]


class SpectralProfile(FrozenModel):
    """Tabulated atmospheric transmission and sky spectral radiance."""
    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    wavelength_nm: np.ndarray = Field(..., description="Strictly increasing sample wavelengths (nm)")
    transmission: np.ndarray = Field(..., description="Atmospheric transmission in [0, 1]")
    radiance: np.ndarray = Field(..., description="Sky radiance in W·m⁻²·sr⁻¹·nm⁻¹")
    source: str = Field("unknown", description="Where the samples came from")
    input_unit: RadianceUnit = Field(RadianceUnit.W_M2_SR_NM, description="Radiance unit declared by the source")

    @field_validator("wavelength_nm", "transmission", "radiance", mode="before")
    @classmethod
    def _as_readonly_array(cls, value):
        arr = np.array(value, dtype=float)
        if arr.ndim != 1:
            raise ValueError("expected a 1-D sequence of samples")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check_samples(self):
        n = len(self.wavelength_nm)
        if len(self.transmission) != n or len(self.radiance) != n:
            raise ValueError("wavelength, transmission and radiance must have equal length")
        if n < 2:
            raise ValueError("a spectral profile needs at least 2 samples")
        for name in ("wavelength_nm", "transmission", "radiance"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite values")
        if np.any(np.diff(self.wavelength_nm) <= 0):
            raise ValueError("wavelengths must be strictly increasing")
        if np.any((self.transmission < 0) | (self.transmission > 1)):
            raise ValueError("transmission must lie in [0, 1]")
        if np.any(self.radiance < 0):
            raise ValueError("radiance must be non-negative")
        return self

    @property
    def span_nm(self) -> Tuple[float, float]:
        return float(self.wavelength_nm[0]), float(self.wavelength_nm[-1])


# --- Turbulence ---

class HV57Profile(FrozenModel):
    """Hufnagel-Valley Cn² model; `scale` multiplies the whole profile (1×HV5/7 by default)."""
    model: Literal["hv57"] = "hv57"
    ground_strength: float = Field(config.HV_GROUND_STRENGTH, ge=0, description="A, m^-2/3")
    rms_wind: float = Field(config.HV_RMS_WIND, ge=0, description="Upper-wind rms speed, m/s")
    scale: float = Field(1.0, ge=0)


class TabulatedCn2Profile(FrozenModel):
    """User-supplied (altitude, Cn²) pairs, linearly interpolated."""
    model: Literal["table"] = "table"
    altitude_m: Tuple[float, ...]
    cn2: Tuple[float, ...]
    source: str = "table"

    @model_validator(mode="after")
    def _check_table(self):
        if len(self.altitude_m) != len(self.cn2):
            raise ValueError("altitude and cn2 columns differ in length")
        if len(self.altitude_m) < 2:
            raise ValueError("a Cn² table needs at least 2 rows")
        alt = np.asarray(self.altitude_m)
        if np.any(alt < 0):
            raise ValueError("altitudes must be non-negative")
        if np.any(np.diff(alt) <= 0):
            raise ValueError("altitudes must be strictly increasing")
        if np.any(np.asarray(self.cn2) < 0):
            raise ValueError("Cn² must be non-negative")
        return self


Cn2Profile = Annotated[Union[HV57Profile, TabulatedCn2Profile], Field(discriminator="model")]


def orbital_slew_rate(altitude_m: float) -> float:
    """Angular slew rate (rad/s) of a circular orbit seen at zenith."""
    speed = math.sqrt(config.EARTH_GM / (config.EARTH_RADIUS_M + altitude_m))
    return speed / altitude_m


class WindModel(FrozenModel):
    """Slew-augmented Bufton wind: v(h) = slew·h + ground + peak·exp(-((h-center)/width)²)."""
    ground_speed: float = Field(config.GROUND_WIND, ge=0)
    bufton_peak: float = Field(config.BUFTON_PEAK, ge=0)
    bufton_center_m: float = Field(config.BUFTON_CENTER_M, ge=0)
    bufton_width_m: float = Field(config.BUFTON_WIDTH_M, gt=0)
    slew_rate: float = Field(default_factory=lambda: orbital_slew_rate(config.ORBIT_ALTITUDE_M), ge=0)

    @classmethod
    def for_circular_orbit(cls, altitude_m: float, **kwargs) -> "WindModel":
        return cls(slew_rate=orbital_slew_rate(altitude_m), **kwargs)


class SiteModel(FrozenModel):
    cn2: Cn2Profile = Field(default_factory=HV57Profile)
    wind: WindModel = Field(default_factory=WindModel)
    zenith_angle_rad: float = Field(0.0, ge=0, lt=math.pi / 2)
    source_altitude_m: float = Field(config.ORBIT_ALTITUDE_M, gt=0)
    quadrature_intervals: int = Field(default_factory=lambda: config.QUADRATURE_INTERVALS, ge=2)

    @field_validator("quadrature_intervals")
    @classmethod
    def _even_intervals(cls, value: int) -> int:
        # Simpson pairs intervals
        return value + (value % 2)

    @property
    def reference_wavelength_nm(self) -> float:
        return config.REFERENCE_WAVELENGTH_NM


# --- Optics / link ---

class FilterStrategy(str, Enum):
    """Field-stop sizing: diffraction-limited or turbulence-limited."""
    DL = "dl"
    TL = "tl"


class LinkConfig(FrozenModel):
    transmitter_diameter_m: float = Field(config.TRANSMITTER_DIAMETER_M, gt=0)
    receiver_diameter_m: float = Field(config.RECEIVER_DIAMETER_M, gt=0)
    focal_length_m: Optional[float] = Field(None, gt=0, description="Only needed for physical spot diameters")
    range_m: float = Field(config.RANGE_M, ge=0)
    eta_spec: float = Field(config.ETA_SPEC, gt=0, le=1)
    eta_rec: float = Field(config.ETA_REC, gt=0, le=1)
    eta_det: float = Field(config.ETA_DET, gt=0, le=1)
    dark_count_hz: float = Field(config.DARK_COUNT_HZ, ge=0)
    gate_window_s: float = Field(config.GATE_WINDOW_S, gt=0)
    filter_width_nm: float = Field(config.FILTER_WIDTH_NM, gt=0)
    signal_wavelength_nm: float = Field(config.SIGNAL_WAVELENGTH_NM, gt=0)
    strategy: FilterStrategy = FilterStrategy.TL


class ProtocolParams(FrozenModel):
    mu: float = Field(config.MU, gt=0)
    nu: float = Field(config.NU, gt=0)
    e0: float = Field(config.E0, ge=0, le=1)
    e_d: float = Field(config.E_D, ge=0, le=1)
    f_ec: float = Field(config.F_EC, ge=1)
    decoy_fraction: float = Field(config.DECOY_FRACTION, ge=0, lt=1)
    pulse_rate_hz: float = Field(config.PULSE_RATE_HZ, gt=0)

    @model_validator(mode="after")
    def _decoy_below_signal(self):
        if not self.nu < self.mu:
            raise ValueError(f"decoy MPN nu={self.nu} must be below signal MPN mu={self.mu}")
        return self


# --- Adaptive optics ---

class AOParams(FrozenModel):
    tracking_bandwidth_hz: float = Field(config.TRACKING_BANDWIDTH_HZ, gt=0)
    bandwidth_hz: float = Field(..., gt=0, description="Higher-order closed-loop bandwidth f_c")

    @classmethod
    def preset(cls, name: str) -> "AOParams":
        if name not in config.AO_PRESETS:
            raise KeyError(f"Unknown AO preset '{name}'. Allowed: {list(config.AO_PRESETS)}")
        return cls(bandwidth_hz=config.AO_PRESETS[name])


class ResidualError(FrozenModel):
    phase_variance_rad2: float = Field(..., ge=0)
    opd_variance_m2: float = Field(..., ge=0)
    wavelength_nm: float = Field(..., gt=0)

    @model_validator(mode="after")
    def _consistent(self):
        expected = self.phase_variance_rad2 * (self.wavelength_nm * 1e-9 / (2 * math.pi)) ** 2
        if not math.isclose(self.opd_variance_m2, expected, rel_tol=1e-9, abs_tol=1e-30):
            raise ValueError("OPD variance disagrees with phase variance at the recorded wavelength")
        return self


# --- QKD ---

class LinkBudget(FrozenModel):
    """One fully evaluated channel point."""
    wavelength_nm: float
    strategy: FilterStrategy
    r0_m: float
    r0_source: str = Field(..., description="explicit | site | ao | strehl | open_loop")
    strehl: float = Field(..., gt=0, le=1)
    omega_fov_sr: float = Field(..., gt=0)
    eta_geo: float = Field(..., ge=0, le=1)
    eta_trans: float = Field(..., ge=0, le=1)
    eta_fs: float = Field(..., ge=0, le=1)
    eta_total: float = Field(..., ge=0, le=1)
    n_b: float = Field(..., ge=0)
    y0: float = Field(..., ge=0, le=1)
    q_mu: float = Field(..., ge=0, le=1)
    q_nu: float = Field(..., ge=0, le=1)
    e_mu: float = Field(..., ge=0, le=1)
    e_nu: float = Field(..., ge=0, le=1)
    q_1: float = Field(..., ge=0, le=1)
    y_1: float = Field(..., ge=0, le=1)
    e_1: float = Field(..., ge=0, le=0.5)
    snr_mu: float = Field(..., ge=1)
    q_ratio: float = Field(..., ge=0, description="q = Q_1/Q_mu")
    c1: float
    c2: float
    p_kb_raw: float
    r_kb_hz: float = Field(..., ge=0)
    flags: Tuple[str, ...] = ()

    @model_validator(mode="after")
    def _gains_above_background(self):
        if self.q_mu < self.y0 or self.q_nu < self.y0:
            raise ValueError("gains must not fall below the background probability")
        return self


# --- Monte Carlo ---

class McConfig(FrozenModel):
    pulses: int = Field(config.MC_PULSES, ge=1)
    seed: int = Field(config.MC_SEED, ge=0, lt=2**64)
    eta: float = Field(..., ge=0, le=1)
    y0: float = Field(..., ge=0, le=1)
    n: float = Field(..., ge=0, description="Mean photon number")
    e0: float = Field(config.E0, ge=0, le=1)
    e_d: float = Field(config.E_D, ge=0, le=1)
    block_pulses: int = Field(config.MC_BLOCK_PULSES, ge=1)
    workers: int = Field(1, ge=1)


class McEstimate(FrozenModel):
    q_hat: float = Field(..., ge=0, le=2)
    e_hat: float = Field(..., ge=0, le=1)
    stderr_q: float = Field(..., ge=0)
    stderr_e: float = Field(..., ge=0)
    clicks: int = Field(..., ge=0, description="Pulses with at least one click")
    signal_clicks: int = Field(..., ge=0)
    background_clicks: int = Field(..., ge=0)
    pulses: int = Field(..., ge=1)
    generator: str
    block_pulses: int
    blocks: int


# --- Scenario / sweeps ---

class SweepAxis(str, Enum):
    R0 = "r0"
    STREHL = "strehl"
    FC = "fc"
    WAVELENGTH = "wavelength"


class Spacing(str, Enum):
    LINEAR = "linear"
    LOG = "log"


class SweepSettings(FrozenModel):
    axis: SweepAxis = SweepAxis.R0
    minimum: float = 0.05
    maximum: float = 1.0
    points: int = Field(config.SWEEP_POINTS, ge=2)
    spacing: Spacing = Spacing.LINEAR
    wavelengths_nm: Tuple[float, ...] = (1549.91, 780.945, 430.886)
    strategies: Tuple[FilterStrategy, ...] = (FilterStrategy.DL, FilterStrategy.TL)

    @model_validator(mode="after")
    def _check_range(self):
        if not self.minimum < self.maximum:
            raise ValueError(f"sweep minimum {self.minimum} must be below maximum {self.maximum}")
        if self.spacing == Spacing.LOG and self.minimum <= 0:
            raise ValueError("log spacing requires a positive minimum")
        if self.axis in (SweepAxis.STREHL, SweepAxis.FC, SweepAxis.R0) and self.minimum <= 0:
            raise ValueError(f"{self.axis.value} sweeps need a positive minimum")
        if self.axis == SweepAxis.STREHL and self.maximum > 1:
            raise ValueError("Strehl sweeps must stay within (0, 1]")
        if not self.strategies:
            raise ValueError("at least one strategy is required")
        if self.axis != SweepAxis.WAVELENGTH and not self.wavelengths_nm:
            raise ValueError("at least one wavelength is required")
        return self


class OptimizeSettings(FrozenModel):
    search_min_nm: float = Field(config.OPTIMIZER_SEARCH_NM[0], gt=0)
    search_max_nm: float = Field(config.OPTIMIZER_SEARCH_NM[1], gt=0)
    step_nm: Optional[float] = Field(None, gt=0, description="Defaults to half the filter width")

    @model_validator(mode="after")
    def _check_range(self):
        if not self.search_min_nm < self.search_max_nm:
            raise ValueError("search minimum must be below search maximum")
        return self


class Scenario(FrozenModel):
    """Everything needed to evaluate one channel point or a sweep."""
    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    profile: SpectralProfile
    profile_source: str = config.DEFAULT_PROFILE
    site: Optional[SiteModel] = None
    r0_m: Optional[float] = Field(None, gt=0)
    link: LinkConfig = Field(default_factory=LinkConfig)
    protocol: ProtocolParams = Field(default_factory=ProtocolParams)
    ao: Optional[AOParams] = None
    sweep: SweepSettings = Field(default_factory=SweepSettings)
    optimize: OptimizeSettings = Field(default_factory=OptimizeSettings)

    @model_validator(mode="after")
    def _one_turbulence_source(self):
        if (self.site is None) == (self.r0_m is None):
            raise ValueError("exactly one of a site model or an explicit r0 must be given")
        if self.ao is not None and self.site is None:
            raise ValueError("AO correction needs a site model to supply Greenwood frequencies")
        return self


class SweepSpec(FrozenModel):
    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    settings: SweepSettings
    scenario: Scenario


class SweepEntry(FrozenModel):
    """One (wavelength, strategy) cell of a sweep row."""
    wavelength_nm: float
    strategy: FilterStrategy
    budget: Optional[LinkBudget] = None
    error: Optional[str] = None
    dl_limit_r_kb_hz: Optional[float] = None

    @property
    def r_kb_hz(self) -> float:
        return self.budget.r_kb_hz if self.budget is not None else 0.0


class SweepRow(FrozenModel):
    axis: SweepAxis
    axis_value: float
    entries: Tuple[SweepEntry, ...]


class OptimizationResult(FrozenModel):
    wavelength_nm: Optional[float] = Field(None, description="None when no key is possible anywhere")
    r_kb_hz: float = Field(..., ge=0)
    no_key: bool
    filter_width_nm: float
    grid_step_nm: float
    rows: Tuple[SweepRow, ...]
