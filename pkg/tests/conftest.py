import io

import numpy as np
import pytest

from loaders import SyntheticLoader
from models import Scenario, SiteModel, SpectralProfile


@pytest.fixture(scope="session")
def winter_profile():
    """The bundled synthetic winter-zenith profile (395-1700 nm)."""
    return SyntheticLoader().load("builtin:synthetic-winter-zenith")


@pytest.fixture(scope="session")
def dip_profile():
    return SyntheticLoader().load("builtin:flat-single-dip")


@pytest.fixture
def linear_profile():
    """Small hand-made profile with linear radiance, easy to integrate by hand."""
    wl = np.array([400.0, 410.0, 420.0, 430.0, 440.0])
    return SpectralProfile(
        wavelength_nm=wl,
        transmission=np.array([0.5, 0.6, 0.7, 0.8, 0.9]),
        radiance=0.01 * wl,
        source="test",
    )


@pytest.fixture
def winter_scenario(winter_profile):
    return Scenario(profile=winter_profile, profile_source=winter_profile.source, r0_m=0.5)


@pytest.fixture
def site_scenario(winter_profile):
    return Scenario(profile=winter_profile, profile_source=winter_profile.source, site=SiteModel())


@pytest.fixture
def csv_text():
    def build(rows, unit="W_m2_sr_nm", header="wavelength_nm,transmission,radiance"):
        lines = []
        if unit:
            lines.append(f"# unit={unit}")
        lines.append(header)
        lines.extend(rows)
        return io.StringIO("\n".join(lines) + "\n")
    return build
