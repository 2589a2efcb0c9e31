"""Parameter sweeps and the exhaustive optimal-wavelength search."""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import ao as ao_math
import config
import qkd
from errors import BracketDomainError, ConfigError, FSQKDError, OutOfRangeError
from logger import get_logger
from models import (
    AOParams,
    FilterStrategy,
    OptimizationResult,
    Scenario,
    Spacing,
    SweepAxis,
    SweepEntry,
    SweepRow,
    SweepSettings,
    SweepSpec,
)
from turbulence import site_coherence

logger = get_logger(__name__)

CSV_COLUMNS = [
    "axis_value", "lambda_nm", "strategy", "r0_m", "strehl", "omega_fov_sr",
    "eta_geo", "eta_trans", "eta_fs", "eta_total", "n_b", "y0", "q_mu", "q_nu",
    "e_mu", "q_1", "y_1", "e_1", "snr_mu", "p_kb_raw", "r_kb_hz", "flags",
]
DL_LIMIT_COLUMN = "dl_limit_r_kb_hz"
OPEN_LOOP_SOURCE = "open_loop"
OPEN_LOOP_FLAG = "fc_below_open_loop"

# Resolves (axis value, wavelength) to a 500-nm r0 and its source label
R0Resolver = Callable[[float, float], Tuple[float, str]]


def axis_grid(settings: SweepSettings) -> np.ndarray:
    if settings.spacing == Spacing.LOG:
        return np.geomspace(settings.minimum, settings.maximum, settings.points)
    return np.linspace(settings.minimum, settings.maximum, settings.points)


def _evaluate_entry(
    scenario: Scenario, wavelength_nm: float, strategy: FilterStrategy, r0_m: float, source: str,
    filter_width_nm: Optional[float] = None,
) -> SweepEntry:
    update = {"signal_wavelength_nm": wavelength_nm, "strategy": strategy}
    if filter_width_nm is not None:
        update["filter_width_nm"] = filter_width_nm
    cfg = scenario.link.model_copy(update=update)
    try:
        budget = qkd.evaluate_link(scenario.profile, r0_m, cfg, scenario.protocol, r0_source=source)
        return SweepEntry(wavelength_nm=wavelength_nm, strategy=strategy, budget=budget)
    except (FSQKDError, ValueError) as e:
        logger.debug(f"Sweep point failed at {wavelength_nm:g} nm ({strategy.value}): {e}")
        return SweepEntry(wavelength_nm=wavelength_nm, strategy=strategy, error=str(e))


def _dl_limit(scenario: Scenario, wavelength_nm: float) -> float:
    """Key rate with no residual wavefront error (S = 1)."""
    entry = _evaluate_entry(scenario, wavelength_nm, FilterStrategy.TL, math.inf, "diffraction_limit")
    return entry.r_kb_hz


def open_loop_floor(coherence: Dict[str, float], receiver_diameter_m: float, tracking_bandwidth_hz: float) -> float:
    """Lowest useful AO bandwidth for a site: closed loop matches open loop there.

    Returns 0 when tracking residual alone exceeds the uncorrected error, so no
    point is clipped.
    """
    try:
        return ao_math.effective_fc_open_loop(
            coherence["r0_m"], receiver_diameter_m, config.REFERENCE_WAVELENGTH_NM,
            coherence["tracking_greenwood_hz"], coherence["greenwood_hz"], tracking_bandwidth_hz,
        )
    except BracketDomainError as e:
        logger.warning(f"No open-loop equivalent bandwidth: {e}")
        return 0.0


def _r0_resolver(settings: SweepSettings, scenario: Scenario) -> R0Resolver:
    d_r = scenario.link.receiver_diameter_m

    if settings.axis == SweepAxis.R0:
        return lambda value, wl: (value, "explicit")

    if settings.axis == SweepAxis.STREHL:
        def from_strehl(value: float, wl: float) -> Tuple[float, str]:
            opd = ao_math.opd_from_strehl(value, wl)
            return ao_math.r0_from_opd(opd, d_r), "strehl"
        return from_strehl

    if settings.axis == SweepAxis.FC:
        if scenario.site is None:
            raise ConfigError("a bandwidth sweep needs a site model for Greenwood frequencies")
        coherence = site_coherence(scenario.site, d_r)
        f_tc = scenario.ao.tracking_bandwidth_hz if scenario.ao else config.TRACKING_BANDWIDTH_HZ
        floor_hz = open_loop_floor(coherence, d_r, f_tc)
        if settings.minimum < floor_hz:
            logger.warning(
                f"Bandwidths below the open-loop equivalent {floor_hz:.4g} Hz do worse than no correction; "
                f"those points use the uncorrected r0={coherence['r0_m']:.4g} m"
            )

        def from_bandwidth(value: float, wl: float) -> Tuple[float, str]:
            if value < floor_hz:
                return coherence["r0_m"], OPEN_LOOP_SOURCE
            loop = AOParams(tracking_bandwidth_hz=f_tc, bandwidth_hz=value)
            r0 = ao_math.effective_r0_closed_loop(
                loop, coherence["tracking_greenwood_hz"], coherence["greenwood_hz"], d_r,
                config.REFERENCE_WAVELENGTH_NM,
            )
            return r0, "ao"
        return from_bandwidth

    turbulence = scenario.site if scenario.site is not None else scenario.r0_m
    r0, source = qkd.resolve_r0(turbulence, scenario.link, scenario.ao)
    return lambda value, wl: (r0, source)


def run_sweep(spec: SweepSpec, workers: Optional[int] = None) -> List[SweepRow]:
    """Evaluates every grid point for each requested wavelength and strategy.

    Per-point failures become zero-rate entries carrying the error message.
    Rows come back ordered by axis value whatever the worker count.
    """
    settings, scenario = spec.settings, spec.scenario
    grid = axis_grid(settings)
    resolve = _r0_resolver(settings, scenario)
    workers = workers or config.sweep_threads()

    def build_row(value: float) -> SweepRow:
        value = float(value)
        wavelengths: Sequence[float] = (
            (value,) if settings.axis == SweepAxis.WAVELENGTH else settings.wavelengths_nm
        )
        entries = []
        for wl in wavelengths:
            try:
                r0, source = resolve(value, wl)
            except (FSQKDError, ValueError) as e:
                entries.extend(SweepEntry(wavelength_nm=wl, strategy=s, error=str(e)) for s in settings.strategies)
                continue
            dl_limit = _dl_limit(scenario, wl) if settings.axis == SweepAxis.FC else None
            for strategy in settings.strategies:
                entry = _evaluate_entry(scenario, wl, strategy, r0, source)
                if source == OPEN_LOOP_SOURCE and entry.budget is not None:
                    flagged = entry.budget.model_copy(update={"flags": entry.budget.flags + (OPEN_LOOP_FLAG,)})
                    entry = entry.model_copy(update={"budget": flagged})
                if dl_limit is not None:
                    entry = entry.model_copy(update={"dl_limit_r_kb_hz": dl_limit})
                entries.append(entry)
        return SweepRow(axis=settings.axis, axis_value=value, entries=tuple(entries))

    logger.info(
        f"Sweeping {settings.axis.value} over [{settings.minimum:g}, {settings.maximum:g}] "
        f"({settings.points} points, {settings.spacing.value}) with {workers} worker(s)"
    )
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(build_row, grid))
    else:
        rows = [build_row(v) for v in grid]

    failed = sum(1 for row in rows for entry in row.entries if entry.error)
    if failed:
        logger.warning(f"{failed} sweep entries failed and were recorded with zero key rate")
    return rows


def sweep_frame(rows: Sequence[SweepRow]) -> pd.DataFrame:
    """Flattens sweep rows into the fixed CSV column order (one line per entry)."""
    with_limit = any(entry.dl_limit_r_kb_hz is not None for row in rows for entry in row.entries)
    records = []
    for row in rows:
        for entry in row.entries:
            record = {column: np.nan for column in CSV_COLUMNS}
            record.update(axis_value=row.axis_value, lambda_nm=entry.wavelength_nm, strategy=entry.strategy.value)
            if entry.budget is not None:
                b = entry.budget
                record.update(
                    r0_m=b.r0_m, strehl=b.strehl, omega_fov_sr=b.omega_fov_sr, eta_geo=b.eta_geo,
                    eta_trans=b.eta_trans, eta_fs=b.eta_fs, eta_total=b.eta_total, n_b=b.n_b, y0=b.y0,
                    q_mu=b.q_mu, q_nu=b.q_nu, e_mu=b.e_mu, q_1=b.q_1, y_1=b.y_1, e_1=b.e_1,
                    snr_mu=b.snr_mu, p_kb_raw=b.p_kb_raw, r_kb_hz=b.r_kb_hz, flags=";".join(b.flags),
                )
            else:
                record.update(r_kb_hz=0.0, flags=f"error:{entry.error}")
            if with_limit:
                record[DL_LIMIT_COLUMN] = entry.dl_limit_r_kb_hz
            records.append(record)
    columns = CSV_COLUMNS + ([DL_LIMIT_COLUMN] if with_limit else [])
    return pd.DataFrame.from_records(records, columns=columns)


def wavelength_grid(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(math.floor((hi - lo) / step + 1e-9))
    return np.round(lo + step * np.arange(count + 1), 9)


def optimize_wavelength(
    scenario: Scenario,
    filter_width_nm: Optional[float] = None,
    search_nm: Optional[Tuple[float, float]] = None,
    step_nm: Optional[float] = None,
    workers: Optional[int] = None,
) -> OptimizationResult:
    """Exhaustive TL key-rate scan; ties go to the shorter wavelength."""
    width = filter_width_nm or scenario.link.filter_width_nm
    lo, hi = search_nm or (scenario.optimize.search_min_nm, scenario.optimize.search_max_nm)
    step = step_nm or scenario.optimize.step_nm or width / 2.0
    if step > width / 2.0 + 1e-12:
        raise ConfigError(f"grid step {step:g} nm must not exceed half the filter width ({width / 2.0:g} nm)")
    if not lo < hi:
        raise ConfigError(f"search range [{lo:g}, {hi:g}] nm is empty")

    first, last = scenario.profile.span_nm
    if lo - width / 2.0 < first or hi + width / 2.0 > last:
        raise OutOfRangeError(
            f"search range [{lo:g}, {hi:g}] nm plus half the {width:g}-nm notch exceeds "
            f"the profile coverage [{first:g}, {last:g}] nm"
        )

    turbulence = scenario.site if scenario.site is not None else scenario.r0_m
    r0, source = qkd.resolve_r0(turbulence, scenario.link, scenario.ao)
    grid = wavelength_grid(lo, hi, step)
    workers = workers or config.sweep_threads()

    def scan(wl: float) -> SweepRow:
        entry = _evaluate_entry(scenario, float(wl), FilterStrategy.TL, r0, source, filter_width_nm=width)
        return SweepRow(axis=SweepAxis.WAVELENGTH, axis_value=float(wl), entries=(entry,))

    logger.info(f"Optimizing wavelength over [{lo:g}, {hi:g}] nm, step {step:g} nm, notch {width:g} nm, r0={r0:.4g} m")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(scan, grid))
    else:
        rows = tuple(scan(wl) for wl in grid)

    best_wl, best_rate = None, 0.0
    for row in rows:
        rate = row.entries[0].r_kb_hz
        if rate > best_rate:
            best_wl, best_rate = row.axis_value, rate

    if best_wl is None:
        logger.warning("No key is possible anywhere in the search range")
    else:
        logger.info(f"Optimal wavelength {best_wl:.6g} nm with R_KB={best_rate:.6g} Hz")
    return OptimizationResult(
        wavelength_nm=best_wl,
        r_kb_hz=best_rate,
        no_key=best_wl is None,
        filter_width_nm=width,
        grid_step_nm=step,
        rows=rows,
    )
