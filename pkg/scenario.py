"""Scenario files: INI sections layered over config defaults, CLI overrides on top.

Sections and keys:

    [transmitter]  diameter_m, wavelength_nm
    [receiver]     diameter_m, focal_length_m, range_m, eta_spec, eta_rec, eta_det,
                   dark_count_hz, gate_window_s, filter_width_nm, strategy
    [protocol]     mu, nu, e0, e_d, f_ec, decoy_fraction, pulse_rate_hz
    [site]         profile, profile_unit, r0_m | cn2_model, cn2_table, ground_strength,
                   rms_wind, cn2_scale, zenith_deg, source_altitude_m, orbit_altitude_m,
                   slew_rate, ground_wind, bufton_peak, bufton_center_m, bufton_width_m,
                   quadrature_intervals
    [ao]           preset (fc130 | fc200 | fc500 | off), tracking_bandwidth_hz, bandwidth_hz
    [sweep]        axis, min, max, points, spacing, wavelengths_nm, strategies,
                   search_min_nm, search_max_nm, step_nm

Relative file paths resolve against the scenario file's directory.
"""

import math
import os
from configparser import ConfigParser, Error as ConfigParserError
from typing import Any, Dict, Optional

from pydantic import ValidationError

import config
import spectral
from errors import ConfigError
from loaders import BUILTIN_PREFIX, Cn2CsvLoader
from logger import get_logger
from models import (
    AOParams,
    FilterStrategy,
    HV57Profile,
    LinkConfig,
    OptimizeSettings,
    ProtocolParams,
    Scenario,
    SiteModel,
    SweepSettings,
    WindModel,
    orbital_slew_rate,
)

logger = get_logger(__name__)

Sections = Dict[str, Dict[str, Any]]

# ini key -> (target, field)
KEY_MAP: Dict[str, Dict[str, tuple]] = {
    "transmitter": {
        "diameter_m": ("link", "transmitter_diameter_m"),
        "wavelength_nm": ("link", "signal_wavelength_nm"),
    },
    "receiver": {
        "diameter_m": ("link", "receiver_diameter_m"),
        **{k: ("link", k) for k in (
            "focal_length_m", "range_m", "eta_spec", "eta_rec", "eta_det",
            "dark_count_hz", "gate_window_s", "filter_width_nm", "strategy",
        )},
    },
    "protocol": {
        k: ("protocol", k) for k in ("mu", "nu", "e0", "e_d", "f_ec", "decoy_fraction", "pulse_rate_hz")
    },
    "site": {
        "profile": ("files", "profile"),
        "profile_unit": ("files", "profile_unit"),
        "cn2_table": ("files", "cn2_table"),
        "r0_m": ("explicit", "r0_m"),
        "cn2_model": ("cn2", "model"),
        "ground_strength": ("cn2", "ground_strength"),
        "rms_wind": ("cn2", "rms_wind"),
        "cn2_scale": ("cn2", "scale"),
        "zenith_deg": ("geometry", "zenith_deg"),
        "source_altitude_m": ("site", "source_altitude_m"),
        "quadrature_intervals": ("site", "quadrature_intervals"),
        "orbit_altitude_m": ("geometry", "orbit_altitude_m"),
        "slew_rate": ("wind", "slew_rate"),
        "ground_wind": ("wind", "ground_speed"),
        "bufton_peak": ("wind", "bufton_peak"),
        "bufton_center_m": ("wind", "bufton_center_m"),
        "bufton_width_m": ("wind", "bufton_width_m"),
    },
    "ao": {
        "preset": ("ao_choice", "preset"),
        "tracking_bandwidth_hz": ("ao", "tracking_bandwidth_hz"),
        "bandwidth_hz": ("ao", "bandwidth_hz"),
    },
    "sweep": {
        "axis": ("sweep", "axis"),
        "min": ("sweep", "minimum"),
        "max": ("sweep", "maximum"),
        "points": ("sweep", "points"),
        "spacing": ("sweep", "spacing"),
        "wavelengths_nm": ("sweep", "wavelengths_nm"),
        "strategies": ("sweep", "strategies"),
        "search_min_nm": ("optimize", "search_min_nm"),
        "search_max_nm": ("optimize", "search_max_nm"),
        "step_nm": ("optimize", "step_nm"),
    },
}

TURBULENCE_TARGETS = ("cn2", "wind", "geometry", "site")
TURBULENCE_FILES = ("cn2_table",)


def read_scenario_file(path: str) -> Sections:
    """Parses an INI scenario into {section: {key: raw string}}."""
    if not os.path.exists(path):
        raise ConfigError(f"Scenario file not found: {path}")
    parser = ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as f:
            parser.read_file(f)
    except ConfigParserError as e:
        raise ConfigError(f"{path}: {e}") from e

    base = os.path.dirname(os.path.abspath(path))
    sections: Sections = {}
    for name in parser.sections():
        if name not in KEY_MAP:
            raise ConfigError(f"{path}: unknown section [{name}]. Allowed: {list(KEY_MAP)}")
        values = dict(parser.items(name))
        for key in ("profile", "cn2_table"):
            if name == "site" and key in values and not values[key].startswith(BUILTIN_PREFIX):
                if not os.path.isabs(values[key]):
                    values[key] = os.path.join(base, values[key])
        sections[name] = values
    return sections


def merge_sections(base: Sections, overrides: Optional[Sections]) -> Sections:
    merged = {name: dict(values) for name, values in base.items()}
    for name, values in (overrides or {}).items():
        clean = {k: v for k, v in values.items() if v is not None}
        if not clean:
            continue
        target = merged.setdefault(name, {})
        # An explicit r0 from the command line replaces any site turbulence model
        if name == "site" and "r0_m" in clean:
            for key in list(target):
                if KEY_MAP["site"].get(key, ("",))[0] in TURBULENCE_TARGETS or key in TURBULENCE_FILES:
                    del target[key]
        if name == "ao" and "preset" in clean:
            target.pop("bandwidth_hz", None)
        target.update(clean)
    return merged


def _split_list(value) -> list:
    if isinstance(value, (list, tuple)):
        return list(value)
    return [item.strip() for item in str(value).split(",") if item.strip()]


def _group(sections: Sections) -> Dict[str, Dict[str, Any]]:
    groups: Dict[str, Dict[str, Any]] = {}
    for name, values in sections.items():
        for key, value in values.items():
            if key not in KEY_MAP[name]:
                raise ConfigError(f"unknown key '{key}' in [{name}]. Allowed: {sorted(KEY_MAP[name])}")
            target, field = KEY_MAP[name][key]
            groups.setdefault(target, {})[field] = value
    return groups


def _build_site(groups: Dict[str, Dict[str, Any]], files: Dict[str, Any]) -> SiteModel:
    cn2_fields = dict(groups.get("cn2", {}))
    model = str(cn2_fields.pop("model", "hv57")).lower()
    if files.get("cn2_table"):
        if cn2_fields:
            raise ConfigError(f"HV5/7 parameters {sorted(cn2_fields)} conflict with cn2_table")
        cn2 = Cn2CsvLoader().load(files["cn2_table"])
    elif model == "hv57":
        cn2 = HV57Profile(**cn2_fields)
    else:
        raise ConfigError(f"Unknown cn2_model '{model}'. Allowed: ['hv57'] or give cn2_table")

    wind_fields = dict(groups.get("wind", {}))
    geometry = groups.get("geometry", {})
    if "orbit_altitude_m" in geometry:
        if "slew_rate" in wind_fields:
            raise ConfigError("give either slew_rate or orbit_altitude_m, not both")
        wind_fields["slew_rate"] = orbital_slew_rate(float(geometry["orbit_altitude_m"]))
    site_fields = dict(groups.get("site", {}))
    if "zenith_deg" in geometry:
        site_fields["zenith_angle_rad"] = math.radians(float(geometry["zenith_deg"]))
    return SiteModel(cn2=cn2, wind=WindModel(**wind_fields), **site_fields)


def _build_ao(groups: Dict[str, Dict[str, Any]]) -> Optional[AOParams]:
    preset = str(groups.get("ao_choice", {}).get("preset", "off")).lower()
    fields = dict(groups.get("ao", {}))
    if preset in ("off", "none", ""):
        if "bandwidth_hz" not in fields:
            return None
        return AOParams(**fields)
    if preset not in config.AO_PRESETS:
        raise ConfigError(f"Unknown AO preset '{preset}'. Allowed: {list(config.AO_PRESETS) + ['off']}")
    fields.setdefault("bandwidth_hz", config.AO_PRESETS[preset])
    return AOParams(**fields)


def _build_sweep(groups: Dict[str, Dict[str, Any]]) -> SweepSettings:
    fields = dict(groups.get("sweep", {}))
    if "wavelengths_nm" in fields:
        fields["wavelengths_nm"] = tuple(float(v) for v in _split_list(fields["wavelengths_nm"]))
    if "strategies" in fields:
        names = [s.lower() for s in _split_list(fields["strategies"])]
        if names == ["both"]:
            names = ["dl", "tl"]
        fields["strategies"] = tuple(FilterStrategy(n) for n in names)
    return SweepSettings(**fields)


def build_scenario(sections: Sections) -> Scenario:
    """Builds a validated Scenario; every validation failure surfaces as ConfigError."""
    try:
        groups = _group(sections)
        files = groups.get("files", {})
        explicit = groups.get("explicit", {})

        source = files.get("profile") or config.DEFAULT_PROFILE
        profile = spectral.load_profile(source, unit=files.get("profile_unit"))

        turbulence_keys = [t for t in TURBULENCE_TARGETS if groups.get(t)] + [
            f for f in TURBULENCE_FILES if files.get(f)
        ]
        if "r0_m" in explicit:
            if turbulence_keys:
                raise ConfigError(f"explicit r0_m conflicts with site turbulence settings {turbulence_keys}")
            site, r0 = None, float(explicit["r0_m"])
        else:
            site, r0 = _build_site(groups, files), None

        return Scenario(
            profile=profile,
            profile_source=str(source),
            site=site,
            r0_m=r0,
            link=LinkConfig(**groups.get("link", {})),
            protocol=ProtocolParams(**groups.get("protocol", {})),
            ao=_build_ao(groups),
            sweep=_build_sweep(groups),
            optimize=OptimizeSettings(**groups.get("optimize", {})),
        )
    except ValidationError as e:
        raise ConfigError(f"invalid scenario: {e}") from e
    except (TypeError, KeyError) as e:
        raise ConfigError(f"invalid scenario: {e}") from e
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"invalid scenario: {e}") from e


def load_scenario(path: Optional[str] = None, overrides: Optional[Sections] = None) -> Scenario:
    """Loads a scenario file (or pure defaults when path is None) and applies overrides."""
    base = read_scenario_file(path) if path else {}
    scenario = build_scenario(merge_sections(base, overrides))
    turbulence = f"r0={scenario.r0_m:g} m" if scenario.site is None else "site model"
    ao = f"AO f_c={scenario.ao.bandwidth_hz:g} Hz" if scenario.ao else "no AO"
    logger.info(f"Scenario {path or '<defaults>'}: profile {scenario.profile_source}, {turbulence}, {ao}")
    return scenario
