"""Command-line front end: compute, sweep, optimize and validate.

Data (reports, CSV) goes to stdout or --out; diagnostics go to stderr.
Exit codes: 0 success (including no-key results), 1 validation failure,
2 configuration error, 3 domain error.
"""

import argparse
import sys
from contextlib import contextmanager
from typing import IO, Iterator, List, Optional

import pandas as pd
from pydantic import ValidationError

import config
import logger as logging_setup
import qkd
import sweep
from errors import ConfigError, FSQKDError
from evals.validate import AcceptanceEvaluator
from logger import get_logger
from models import FilterStrategy, LinkBudget, Scenario, SweepSpec
from scenario import Sections, load_scenario

logger = get_logger(__name__)

FIELD_UNITS = {
    "wavelength_nm": "nm", "strategy": "", "r0_m": "m", "r0_source": "", "strehl": "",
    "omega_fov_sr": "sr", "eta_geo": "", "eta_trans": "", "eta_fs": "", "eta_total": "",
    "n_b": "photons/gate", "y0": "", "q_mu": "", "q_nu": "", "e_mu": "", "e_nu": "",
    "q_1": "", "y_1": "", "e_1": "", "snr_mu": "", "q_ratio": "", "c1": "", "c2": "",
    "p_kb_raw": "bits/pulse", "r_kb_hz": "Hz", "flags": "",
}


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fsqkd", description="Daytime free-space QKD link engine.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="INI scenario file (defaults to built-in constants)")
    common.add_argument("--lambda", dest="wavelengths", type=_float_list, help="Wavelengths in nm, comma-separated")
    common.add_argument("--strategy", choices=["dl", "tl", "both"], help="Field-stop strategy")
    common.add_argument("--r0", type=float, help="Explicit 500-nm r0 in m (replaces the site model)")
    common.add_argument("--ao", help="AO preset (fc130 | fc200 | fc500) or 'off'")
    common.add_argument("--filter-width", type=float, help="Spectral notch width in nm")
    common.add_argument("--out", help="Write data to this path instead of stdout")
    common.add_argument("--format", choices=["csv", "human"], help="Output format")
    common.add_argument("--log-format", choices=["JSON", "HUMAN", "json", "human"], help="Diagnostic log format")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("compute", parents=[common], help="Evaluate one link budget")

    p_sweep = sub.add_parser("sweep", parents=[common], help="Sweep one axis and emit CSV")
    p_sweep.add_argument("--axis", choices=["r0", "strehl", "fc", "wavelength"])
    p_sweep.add_argument("--min", type=float)
    p_sweep.add_argument("--max", type=float)
    p_sweep.add_argument("--points", type=int)
    p_sweep.add_argument("--spacing", choices=["linear", "log"])

    p_opt = sub.add_parser("optimize", parents=[common], help="Find the key-rate optimal wavelength")
    p_opt.add_argument("--step", type=float, help="Grid step in nm (default: half the filter width)")
    p_opt.add_argument("--search-min", type=float)
    p_opt.add_argument("--search-max", type=float)

    p_val = sub.add_parser("validate", help="Run the acceptance suite")
    p_val.add_argument("--seed", type=int, default=config.MC_SEED)
    p_val.add_argument("--out", default=config.REPORT_PATH, help="JSON report path")
    p_val.add_argument("--log-format", choices=["JSON", "HUMAN", "json", "human"])
    return parser


def _strategies(args) -> Optional[List[str]]:
    if not args.strategy:
        return None
    return ["dl", "tl"] if args.strategy == "both" else [args.strategy]


def build_overrides(args) -> Sections:
    """Maps CLI flags onto scenario sections; unset flags are dropped."""
    strategies = _strategies(args)
    overrides: Sections = {
        "receiver": {"filter_width_nm": args.filter_width},
        "site": {"r0_m": args.r0},
        "ao": {"preset": args.ao},
        "sweep": {
            "axis": getattr(args, "axis", None),
            "min": getattr(args, "min", None),
            "max": getattr(args, "max", None),
            "points": getattr(args, "points", None),
            "spacing": getattr(args, "spacing", None),
            "strategies": strategies,
            "wavelengths_nm": args.wavelengths if getattr(args, "command", "") == "sweep" else None,
            "search_min_nm": getattr(args, "search_min", None),
            "search_max_nm": getattr(args, "search_max", None),
            "step_nm": getattr(args, "step", None),
        },
    }
    if strategies and len(strategies) == 1:
        overrides["receiver"]["strategy"] = strategies[0]
    return overrides


@contextmanager
def output_stream(path: Optional[str]) -> Iterator[IO[str]]:
    if path:
        with open(path, "w", newline="") as f:
            yield f
    else:
        yield sys.stdout


def write_csv(frame: pd.DataFrame, stream: IO[str]) -> None:
    frame.to_csv(stream, index=False, float_format=f"%.{config.CSV_SIGNIFICANT_DIGITS}g", lineterminator="\n")


def budget_frame(budgets: List[LinkBudget]) -> pd.DataFrame:
    records = []
    for b in budgets:
        record = b.model_dump()
        record["strategy"] = b.strategy.value
        record["flags"] = ";".join(b.flags)
        records.append(record)
    return pd.DataFrame.from_records(records, columns=list(FIELD_UNITS))


def format_budget(budget: LinkBudget) -> str:
    lines = [f"# Link budget at {budget.wavelength_nm:g} nm ({budget.strategy.value.upper()})"]
    for field, unit in FIELD_UNITS.items():
        value = getattr(budget, field)
        if field == "strategy":
            value = value.value
        elif field == "flags":
            value = ", ".join(value) or "-"
        elif isinstance(value, float):
            value = f"{value:.{config.CSV_SIGNIFICANT_DIGITS}g}"
        lines.append(f"{field:<14} {value:>18} {unit}".rstrip())
    return "\n".join(lines)


def cmd_compute(args, scenario: Scenario) -> int:
    wavelengths = args.wavelengths or [scenario.link.signal_wavelength_nm]
    strategies = [FilterStrategy(s) for s in (_strategies(args) or [scenario.link.strategy.value])]
    turbulence = scenario.site if scenario.site is not None else scenario.r0_m

    budgets = []
    for wl in wavelengths:
        for strategy in strategies:
            cfg = scenario.link.model_copy(update={"signal_wavelength_nm": wl, "strategy": strategy})
            budget = qkd.evaluate_link(scenario.profile, turbulence, cfg, scenario.protocol, scenario.ao)
            if budget.r_kb_hz == 0:
                logger.warning(f"No key at {wl:g} nm ({strategy.value}); flags: {list(budget.flags)}")
            budgets.append(budget)

    with output_stream(args.out) as stream:
        if (args.format or "human") == "csv":
            write_csv(budget_frame(budgets), stream)
        else:
            stream.write("\n\n".join(format_budget(b) for b in budgets) + "\n")
    return 0


def cmd_sweep(args, scenario: Scenario) -> int:
    rows = sweep.run_sweep(SweepSpec(settings=scenario.sweep, scenario=scenario))
    frame = sweep.sweep_frame(rows)
    with output_stream(args.out) as stream:
        if (args.format or "csv") == "human":
            stream.write(frame.to_string(index=False) + "\n")
        else:
            write_csv(frame, stream)
    return 0


def cmd_optimize(args, scenario: Scenario) -> int:
    result = sweep.optimize_wavelength(scenario)
    frame = sweep.sweep_frame(result.rows)
    summary = {
        "lambda_opt_nm": result.wavelength_nm,
        "r_kb_hz": result.r_kb_hz,
        "no_key": result.no_key,
        "filter_width_nm": result.filter_width_nm,
        "grid_step_nm": result.grid_step_nm,
        "grid_points": len(result.rows),
    }

    if (args.format or "human") == "csv":
        with output_stream(args.out) as stream:
            write_csv(frame, stream)
        logger.info(f"Optimization summary: {summary}")
        return 0

    if args.out:
        with output_stream(args.out) as stream:
            write_csv(frame, stream)
    lines = ["# Optimal wavelength"]
    for key, value in summary.items():
        if value is None:
            value = "none (no key possible)"
        lines.append(f"{key:<16} {value}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_validate(args) -> int:
    report = AcceptanceEvaluator(seed=args.seed).run(report_path=args.out)
    for check in report["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        sys.stdout.write(f"{status}  {check['name']}\n")
    sys.stdout.write(f"{'PASSED' if report['passed'] else 'FAILED'}: report written to {args.out}\n")
    return 0 if report["passed"] else 1


COMMANDS = {"compute": cmd_compute, "sweep": cmd_sweep, "optimize": cmd_optimize}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.log_format:
        logging_setup.set_format(args.log_format)

    try:
        if args.command == "validate":
            return cmd_validate(args)
        scenario = load_scenario(args.scenario, build_overrides(args))
        return COMMANDS[args.command](args, scenario)
    except (ConfigError, ValidationError) as e:
        logger.error(f"Configuration error: {e}")
        return 2
    except FSQKDError as e:
        logger.error(f"Domain error: {e}")
        return e.exit_code
    except ValueError as e:
        logger.error(f"Invalid input: {e}")
        return 2
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
