"""Background counting and the decoy-state BB84 key-rate chain.

Click probabilities follow the additive model Q = Y0 + 1 - exp(-η·n).
"""

import math
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy import special

import ao as ao_math
import config
import optics
import spectral
from errors import DegenerateDecoyError, SaturationError, UndefinedQBERError
from logger import get_logger
from models import AOParams, LinkBudget, LinkConfig, ProtocolParams, SiteModel, SpectralProfile
from turbulence import fried_length

logger = get_logger(__name__)


class DecoyEstimate(NamedTuple):
    q_1: float
    y_1: float
    e_1: float
    flags: Tuple[str, ...]


def background_photons(
    profile: SpectralProfile,
    center_nm: float,
    width_nm: float,
    fov_sr: float,
    receiver_diameter_m: float,
    gate_window_s: float,
) -> float:
    """Sky photons per gate: ∫(λ/4hc)·H_b dλ · Ω · π·D_R² · Δt."""
    band = spectral.radiance_band_integral(profile, center_nm, width_nm, spectral.photon_weight)
    return band * fov_sr * math.pi * receiver_diameter_m ** 2 * gate_window_s


def background_probability(
    n_b: float, eta_spec: float, eta_rec: float, eta_det: float, dark_count_hz: float, gate_window_s: float
) -> float:
    """Per-gate background click probability Y0 = N_b·η_spec·η_rec·η_det + 4·f_dark·Δt."""
    if min(n_b, eta_spec, eta_rec, eta_det, dark_count_hz, gate_window_s) < 0:
        raise ValueError("background inputs must be non-negative")
    y0 = n_b * eta_spec * eta_rec * eta_det + 4.0 * dark_count_hz * gate_window_s
    if y0 > 1:
        raise SaturationError(
            f"background probability Y0={y0:.4g} exceeds 1; reduce the field of view, filter width or gate"
        )
    return y0


def gain(y0: float, eta: float, n: float) -> float:
    return y0 - math.expm1(-eta * n)


def qber(y0: float, eta: float, n: float, e0: float, e_d: float) -> float:
    signal = -math.expm1(-eta * n)
    denominator = y0 + signal
    if denominator <= 0:
        raise UndefinedQBERError("no clicks (Y0 = 0 and η·n = 0); the error rate is undefined")
    return (e0 * y0 + e_d * signal) / denominator


def qber_dl_approx(
    y0_tl: float,
    eta_tl: float,
    n: float,
    e0: float,
    e_d: float,
    strehl: float,
    dark_count_hz: float,
    gate_window_s: float,
) -> float:
    """First-order DL error rate written in TL quantities plus the dark-count term ε."""
    if not 0 < strehl <= 1:
        raise ValueError(f"Strehl ratio must lie in (0, 1], got {strehl}")
    epsilon = 4.0 * dark_count_hz * gate_window_s * (1.0 / strehl - 1.0)
    noise = y0_tl + epsilon
    denominator = noise + eta_tl * n
    if denominator <= 0:
        raise UndefinedQBERError("no clicks; the error rate is undefined")
    return (e0 * noise + e_d * eta_tl * n) / denominator


def snr(q_n: float, y0: float) -> float:
    if y0 <= 0:
        return math.inf
    return q_n / y0


def single_photon_yield_bound(q_mu: float, q_nu: float, y0: float, mu: float, nu: float) -> float:
    """Unclamped decoy lower bound on the single-photon yield Y_1."""
    if not 0 < nu < mu:
        raise ValueError(f"decoy estimation needs 0 < nu < mu, got nu={nu}, mu={mu}")
    return (mu / (mu * nu - nu ** 2)) * (
        q_nu * math.exp(nu)
        - q_mu * math.exp(mu) * nu ** 2 / mu ** 2
        - (mu ** 2 - nu ** 2) / mu ** 2 * y0
    )


def decoy_estimates(
    q_mu: float, q_nu: float, y0: float, mu: float, nu: float, e_nu: float, e0: float
) -> DecoyEstimate:
    """Single-photon gain, yield and error rate, clamped to their physical ranges.

    Raises DegenerateDecoyError when no positive single-photon yield remains.
    """
    flags: List[str] = []
    y_1 = single_photon_yield_bound(q_mu, q_nu, y0, mu, nu)
    if y_1 <= 0:
        raise DegenerateDecoyError(f"single-photon yield bound {y_1:.4g} is not positive")
    if y_1 > 1:
        y_1 = 1.0
        flags.append("y1_clamped_high")
    q_1 = y_1 * mu * math.exp(-mu)

    e_1 = (e_nu * q_nu * math.exp(nu) - e0 * y0) / (y_1 * nu)
    if e_1 < 0:
        e_1 = 0.0
        flags.append("e1_clamped_low")
    elif e_1 > 0.5:
        e_1 = 0.5
        flags.append("e1_clamped_high")
    return DecoyEstimate(q_1=q_1, y_1=y_1, e_1=e_1, flags=tuple(flags))


def binary_entropy(x):
    """H2(x) in bits, with H2(0) = H2(1) = 0."""
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ValueError(f"binary entropy is defined on [0, 1], got {x}")
    bits = (special.entr(arr) + special.entr(1.0 - arr)) / math.log(2.0)
    return float(bits) if bits.ndim == 0 else bits


def key_bit_probability(q_mu: float, e_mu: float, q_1: float, e_1: float, f_ec: float) -> float:
    """Raw secret bits per pulse; negative means no key."""
    return 0.5 * (-q_mu * f_ec * binary_entropy(e_mu) + q_1 * (1.0 - binary_entropy(e_1)))


def key_bit_probability_rearranged(q_mu: float, q: float, c1: float, c2: float) -> float:
    """Same quantity written as ½·Q_μ·(−c1 + q·c2), with q = Q_1/Q_μ."""
    if q_mu == 0:
        return 0.0
    return 0.5 * q_mu * (-c1 + q * c2)


def key_bit_rate(p_kb: float, pulse_rate_hz: float, decoy_fraction: float) -> float:
    if not pulse_rate_hz > 0 or not 0 <= decoy_fraction < 1:
        raise ValueError("pulse rate must be positive and decoy fraction in [0, 1)")
    return max(p_kb, 0.0) * pulse_rate_hz * (1.0 - decoy_fraction)


def resolve_r0(
    turbulence: Union[SiteModel, float], cfg: LinkConfig, ao: Optional[AOParams] = None
) -> Tuple[float, str]:
    """500-nm referenced r0 and where it came from (explicit, site or ao)."""
    if isinstance(turbulence, SiteModel):
        if ao is not None:
            return ao_math.closed_loop_r0_for_site(turbulence, ao, cfg.receiver_diameter_m), "ao"
        return fried_length(turbulence, config.REFERENCE_WAVELENGTH_NM), "site"
    if ao is not None:
        raise ValueError("AO correction needs a site model to supply Greenwood frequencies")
    r0 = float(turbulence)
    if not r0 > 0:
        raise ValueError(f"r0 must be positive, got {r0}")
    return r0, "explicit"


def evaluate_link(
    profile: SpectralProfile,
    turbulence: Union[SiteModel, float],
    cfg: LinkConfig,
    protocol: ProtocolParams,
    ao: Optional[AOParams] = None,
    r0_source: Optional[str] = None,
) -> LinkBudget:
    """Full channel budget at cfg.signal_wavelength_nm with cfg.strategy.

    `turbulence` is a site model or an explicit 500-nm r0 in metres.
    `r0_source` relabels an r0 the caller already resolved.
    """
    wl = cfg.signal_wavelength_nm
    strategy = cfg.strategy
    r0, source = resolve_r0(turbulence, cfg, ao)
    if r0_source:
        source = r0_source

    # 1. Optics
    factors = optics.efficiency_breakdown(cfg, profile, r0, wl, strategy)
    eta = factors["eta_total"]
    omega = optics.fov(strategy, cfg.receiver_diameter_m, wl, r0)

    # 2. Background
    n_b = background_photons(profile, wl, cfg.filter_width_nm, omega, cfg.receiver_diameter_m, cfg.gate_window_s)
    y0 = background_probability(n_b, cfg.eta_spec, cfg.eta_rec, cfg.eta_det, cfg.dark_count_hz, cfg.gate_window_s)

    # 3. Gains and error rates
    q_mu = gain(y0, eta, protocol.mu)
    q_nu = gain(y0, eta, protocol.nu)
    if q_mu > 1 or q_nu > 1:
        raise SaturationError(f"gain Q_mu={q_mu:.4g} exceeds 1 at {wl:g} nm")
    e_mu = qber(y0, eta, protocol.mu, protocol.e0, protocol.e_d)
    e_nu = qber(y0, eta, protocol.nu, protocol.e0, protocol.e_d)

    # 4. Decoy estimates and key
    flags: List[str] = []
    try:
        decoy = decoy_estimates(q_mu, q_nu, y0, protocol.mu, protocol.nu, e_nu, protocol.e0)
        flags.extend(decoy.flags)
    except DegenerateDecoyError as e:
        logger.debug(f"Decoy estimate degenerate at {wl:g} nm, r0={r0:.4g} m: {e}")
        decoy = DecoyEstimate(q_1=0.0, y_1=0.0, e_1=0.5, flags=())
        flags.extend(["y1_clamped_low", "decoy_degenerate"])

    c1 = protocol.f_ec * binary_entropy(e_mu)
    c2 = 1.0 - binary_entropy(decoy.e_1)
    q_ratio = decoy.q_1 / q_mu if q_mu > 0 else 0.0
    p_kb = key_bit_probability(q_mu, e_mu, decoy.q_1, decoy.e_1, protocol.f_ec)
    if p_kb < 0:
        flags.append("p_kb_negative")
    r_kb = 0.0 if decoy.y_1 <= 0 else key_bit_rate(p_kb, protocol.pulse_rate_hz, protocol.decoy_fraction)

    return LinkBudget(
        wavelength_nm=wl,
        strategy=strategy,
        r0_m=r0,
        r0_source=source,
        strehl=factors["strehl"],
        omega_fov_sr=omega,
        eta_geo=factors["eta_geo"],
        eta_trans=factors["eta_trans"],
        eta_fs=factors["eta_fs"],
        eta_total=eta,
        n_b=n_b,
        y0=y0,
        q_mu=q_mu,
        q_nu=q_nu,
        e_mu=e_mu,
        e_nu=e_nu,
        q_1=decoy.q_1,
        y_1=decoy.y_1,
        e_1=decoy.e_1,
        snr_mu=snr(q_mu, y0),
        q_ratio=q_ratio,
        c1=c1,
        c2=c2,
        p_kb_raw=p_kb,
        r_kb_hz=r_kb,
        flags=tuple(flags),
    )
