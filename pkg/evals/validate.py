"""Acceptance suite behind `cli validate`.

Each check is a named callable returning one or more CheckResults; the
evaluator runs them all (or a chosen subset) and writes a JSON report.
"""

import json
import math
import os
import time
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

import ao
import config
import montecarlo
import optics
import qkd
import sweep
import turbulence
from loaders import SyntheticLoader
from logger import get_logger
from models import (
    FilterStrategy,
    LinkConfig,
    McConfig,
    Scenario,
    SiteModel,
    SweepAxis,
    SweepSettings,
    SweepSpec,
)

logger = get_logger(__name__)


class CheckResult(BaseModel):
    name: str
    expected: Optional[float] = None
    observed: Optional[float] = None
    tolerance: Optional[float] = None
    passed: bool
    detail: str = ""


def within(name: str, expected: float, observed: float, tolerance: float, relative: bool = False) -> CheckResult:
    limit = tolerance * abs(expected) if relative else tolerance
    passed = bool(abs(observed - expected) <= limit)
    kind = "relative" if relative else "absolute"
    return CheckResult(
        name=name, expected=expected, observed=observed, tolerance=tolerance,
        passed=passed, detail=f"{kind} tolerance",
    )


def holds(name: str, condition: bool, detail: str = "") -> CheckResult:
    return CheckResult(name=name, passed=bool(condition), detail=detail)


class AcceptanceEvaluator:
    """Runs the release-gate checks against built-in presets and bundled data."""

    def __init__(self, seed: int = config.MC_SEED, mc_pulses: int = config.MC_PULSES):
        self.seed = seed
        self.mc_pulses = mc_pulses
        self.checks: Dict[str, Callable[[], List[CheckResult]]] = {
            "closed_loop_r0": self.check_closed_loop_r0,
            "opd_residuals": self.check_opd_residuals,
            "strehl_at_144nm": self.check_strehl_at_144nm,
            "fov_ratios": self.check_fov_ratios,
            "optics_constants": self.check_optics_constants,
            "site_moments": self.check_site_moments,
            "ao_fov_reduction": self.check_ao_fov_reduction,
            "algebraic_identities": self.check_algebraic_identities,
            "monte_carlo_equivalence": self.check_monte_carlo_equivalence,
            "monte_carlo_determinism": self.check_monte_carlo_determinism,
            "qber_limits": self.check_qber_limits,
            "wavelength_optimizer": self.check_wavelength_optimizer,
            "strategy_dominance": self.check_strategy_dominance,
        }

    # --- Coherence and AO ---

    def check_closed_loop_r0(self) -> List[CheckResult]:
        results = []
        for preset, expected in (("fc130", 0.37), ("fc200", 0.50), ("fc500", 0.74)):
            r0 = ao.effective_r0_closed_loop(ao.PRESETS[preset], 43.0, 301.0, 1.0, 500.0)
            results.append(within(f"closed_loop_r0[{preset}]", expected, r0, 0.01))
        return results

    def check_opd_residuals(self) -> List[CheckResult]:
        results = [within("opd_open_loop_nm", 980.0, ao.opd_rms_open_loop(0.05, 1.0) * 1e9, 2.0)]
        site = SiteModel()
        for preset, expected in (("fc130", 184.0), ("fc200", 144.0), ("fc500", 104.0)):
            opd = ao.opd_rms_closed_loop(site, ao.PRESETS[preset], 1.0) * 1e9
            results.append(within(f"opd_closed_loop_nm[{preset}]", expected, opd, 3.0))
        return results

    def check_strehl_at_144nm(self) -> List[CheckResult]:
        return [
            within(f"strehl_144nm[{wl:g}]", expected, ao.strehl_from_opd(144e-9, wl), 0.01)
            for wl, expected in ((1550.0, 0.71), (781.0, 0.37), (431.0, 0.14))
        ]

    def check_fov_ratios(self) -> List[CheckResult]:
        return [
            within("dl_fov_ratio_1550_431", 12.93, optics.dl_fov(1.0, 1550.0) / optics.dl_fov(1.0, 431.0), 0.01),
            within("tl_dl_ratio_431", 17.8, optics.tl_fov(1.0, 431.0, 0.30) / optics.dl_fov(1.0, 431.0), 0.5),
            within("tl_dl_ratio_1550", 1.99, optics.tl_fov(1.0, 1550.0, 0.30) / optics.dl_fov(1.0, 1550.0), 0.05),
        ]

    def check_optics_constants(self) -> List[CheckResult]:
        cfg = LinkConfig(focal_length_m=10.0)
        return [
            within("dl_spot_um_1550", 37.82, optics.dl_spot_diameter(cfg, 1550.0) * 1e6, 0.01),
            within("dl_fov_sr_1550", 1.123e-11, optics.dl_fov(1.0, 1550.0), 0.005, relative=True),
            within("eta_geo_1550", 0.0070, optics.geometric_coupling(LinkConfig(), 1550.0), 0.0002),
        ]

    def check_site_moments(self) -> List[CheckResult]:
        site = SiteModel()
        coherence = turbulence.site_coherence(site, 1.0)
        results = [
            within("site_r0_m", 0.05, coherence["r0_m"], 0.10, relative=True),
            within("site_greenwood_hz", 301.0, coherence["greenwood_hz"], 0.10, relative=True),
            within("site_tracking_greenwood_hz", 43.0, coherence["tracking_greenwood_hz"], 0.10, relative=True),
        ]
        doubled = site.quadrature_intervals * 2
        for name, fn in (
            ("r0", lambda n: turbulence.fried_length(site, 500.0, n)),
            ("greenwood", lambda n: turbulence.greenwood_frequency(site, 500.0, n)),
            ("tracking_greenwood", lambda n: turbulence.tracking_greenwood_frequency(site, 500.0, 1.0, n)),
        ):
            base, fine = fn(site.quadrature_intervals), fn(doubled)
            results.append(within(f"quadrature_convergence[{name}]", 0.0, abs(fine / base - 1.0), 1e-3))
        return results

    def check_ao_fov_reduction(self) -> List[CheckResult]:
        results = []
        for wl, expected, tol in ((1550.0, 20.0, 1.0), (781.0, 52.0, 2.0), (431.0, 78.0, 3.0)):
            ratio = optics.tl_fov(1.0, wl, 0.05) / optics.tl_fov(1.0, wl, 0.50)
            results.append(within(f"ao_fov_reduction[{wl:g}]", expected, ratio, tol))
        return results

    # --- Key-rate algebra ---

    def check_algebraic_identities(self) -> List[CheckResult]:
        rng = np.random.default_rng(self.seed)
        worst = 0.0
        for _ in range(10_000):
            q_mu = rng.uniform(1e-6, 1.0)
            e_mu, e_1 = rng.uniform(0.0, 0.5, size=2)
            q_1 = rng.uniform(0.0, q_mu)
            f_ec = rng.uniform(1.0, 1.5)
            direct = qkd.key_bit_probability(q_mu, e_mu, q_1, e_1, f_ec)
            c1 = f_ec * qkd.binary_entropy(e_mu)
            c2 = 1.0 - qkd.binary_entropy(e_1)
            rearranged = qkd.key_bit_probability_rearranged(q_mu, q_1 / q_mu, c1, c2)
            scale = max(abs(direct), 0.5 * q_mu * c1, 0.5 * q_1 * c2)
            worst = max(worst, abs(direct - rearranged) / scale)

        opd = ao.opd_rms_open_loop(0.05, 1.0)
        strehl_gap = abs(ao.strehl_from_opd(opd, 500.0) / optics.strehl_uncorrected(1.0, 0.05) - 1.0)
        fov_gap = max(
            abs(ao.tl_fov_from_opd(1.0, wl, ao.opd_rms_open_loop(0.3, 1.0)) / optics.tl_fov(1.0, wl, 0.3) - 1.0)
            for wl in (431.0, 781.0, 1550.0)
        )
        return [
            within("key_bit_probability_forms", 0.0, worst, 1e-12),
            within("strehl_opd_consistency", 0.0, strehl_gap, 1e-9),
            within("fov_opd_consistency", 0.0, fov_gap, 1e-9),
        ]

    def check_qber_limits(self) -> List[CheckResult]:
        e0, e_d = config.E0, config.E_D
        results = [
            within("qber_signal_only", e_d, qkd.qber(0.0, 1e-3, 0.7, e0, e_d), 1e-15),
            within("qber_noise_only", e0, qkd.qber(1e-5, 0.0, 0.7, e0, e_d), 1e-15),
        ]
        worst_excess = -math.inf
        for eta_tl in (1e-6, 1e-5, 1e-4, 1e-3 / 0.7):
            for strehl in (0.14, 0.37, 0.71, 1.0):
                y0_tl = 1e-5
                dark = 4.0 * config.DARK_COUNT_HZ * config.GATE_WINDOW_S
                y0_dl = strehl * (y0_tl - dark) + dark
                x = strehl * eta_tl * 0.7
                exact = qkd.qber(y0_dl, strehl * eta_tl, 0.7, e0, e_d)
                approx = qkd.qber_dl_approx(
                    y0_tl, eta_tl, 0.7, e0, e_d, strehl, config.DARK_COUNT_HZ, config.GATE_WINDOW_S
                )
                bound = x ** 2 / (y0_dl - math.expm1(-x))
                worst_excess = max(worst_excess, abs(approx - exact) - bound)
        results.append(holds("qber_dl_approx_remainder", worst_excess <= 0.0, f"worst excess {worst_excess:.3g}"))
        return results

    # --- Monte Carlo ---

    def check_monte_carlo_equivalence(self) -> List[CheckResult]:
        results = []
        for eta in (1e-4, 1e-3, 1e-2):
            for y0 in (0.0, 1e-5, 1e-3):
                for label, n in (("mu", config.MU), ("nu", config.NU)):
                    est = montecarlo.simulate(McConfig(
                        pulses=self.mc_pulses, seed=self.seed, eta=eta, y0=y0, n=n,
                        e0=config.E0, e_d=config.E_D,
                    ))
                    q = qkd.gain(y0, eta, n)
                    e = qkd.qber(y0, eta, n, config.E0, config.E_D)
                    tag = f"eta={eta:g},y0={y0:g},{label}"
                    results.append(within(f"mc_gain[{tag}]", q, est.q_hat, 3.0 * est.stderr_q))
                    results.append(within(f"mc_qber[{tag}]", e, est.e_hat, 3.0 * est.stderr_e))
        return results

    def check_monte_carlo_determinism(self) -> List[CheckResult]:
        cfg = McConfig(pulses=200_000, seed=self.seed, eta=1e-2, y0=1e-3, n=config.MU, block_pulses=50_000)
        first = montecarlo.simulate(cfg)
        second = montecarlo.simulate(cfg.model_copy(update={"workers": 4}))
        same = first.model_dump() == second.model_dump()
        return [holds("mc_seed_determinism", same, f"Q={first.q_hat:.9g}, E={first.e_hat:.9g}")]

    # --- Bundled-data construction tests ---

    def _explicit_scenario(self, profile, r0_m: float = 0.5) -> Scenario:
        return Scenario(profile=profile, profile_source=profile.source, r0_m=r0_m)

    def check_wavelength_optimizer(self) -> List[CheckResult]:
        loader = SyntheticLoader()
        results = []

        dip = self._explicit_scenario(loader.load("builtin:flat-single-dip"))
        found = sweep.optimize_wavelength(dip, filter_width_nm=1.0, search_nm=(690.0, 710.0), step_nm=0.5)
        results.append(within("optimizer_flat_dip_nm", 700.0, found.wavelength_nm or math.nan, 0.5))

        winter = self._explicit_scenario(loader.load("builtin:synthetic-winter-zenith"))
        wide = sweep.optimize_wavelength(winter, filter_width_nm=1.0, search_nm=(400.0, 1600.0), step_nm=0.5)
        results.append(within("optimizer_broad_dip_nm", 431.0, wide.wavelength_nm or math.nan, 0.5))
        narrow = sweep.optimize_wavelength(winter, filter_width_nm=0.05, search_nm=(400.0, 440.0), step_nm=0.025)
        results.append(within("optimizer_narrow_dip_nm", 405.0, narrow.wavelength_nm or math.nan, 0.025))
        return results

    def check_strategy_dominance(self) -> List[CheckResult]:
        winter = self._explicit_scenario(SyntheticLoader().load("builtin:synthetic-winter-zenith"))
        settings = SweepSettings(
            axis=SweepAxis.R0, minimum=0.05, maximum=1.0, points=20,
            strategies=(FilterStrategy.DL, FilterStrategy.TL),
        )
        rows = sweep.run_sweep(SweepSpec(settings=settings, scenario=winter))
        violations = 0
        for row in rows:
            for wl in settings.wavelengths_nm:
                rates = {e.strategy: e.r_kb_hz for e in row.entries if e.wavelength_nm == wl}
                if rates[FilterStrategy.TL] < rates[FilterStrategy.DL] * (1.0 - 1e-12):
                    violations += 1
        return [holds("tl_dominates_dl", violations == 0, f"{violations} violating points")]

    # --- Runner ---

    def run(self, names: Optional[Sequence[str]] = None, report_path: Optional[str] = config.REPORT_PATH) -> Dict:
        """Runs the selected checks (all by default) and writes the JSON report."""
        selected = list(names) if names else list(self.checks)
        unknown = [n for n in selected if n not in self.checks]
        if unknown:
            raise KeyError(f"Unknown checks {unknown}. Allowed: {list(self.checks)}")

        results: List[CheckResult] = []
        timings: Dict[str, float] = {}
        for name in selected:
            logger.info(f"Running check {name}...")
            start = time.perf_counter()
            try:
                results.extend(self.checks[name]())
            except Exception as e:
                logger.error(f"Check {name} raised: {e}", exc_info=True)
                results.append(CheckResult(name=name, passed=False, detail=f"raised {type(e).__name__}: {e}"))
            timings[name] = time.perf_counter() - start

        failed = [r.name for r in results if not r.passed]
        logger.info(f"Validation: {len(results) - len(failed)}/{len(results)} passed")
        report = {
            "passed": not failed,
            "failed": failed,
            "seed": self.seed,
            "mc_pulses": self.mc_pulses,
            "timings_s": timings,
            "checks": [r.model_dump() for r in results],
        }
        if report_path:
            directory = os.path.dirname(report_path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(report_path, "w") as f:
                json.dump(report, f, indent=2)
        return report
