import argparse
import logging
import os
import sys
from typing import List, Optional

from src.config_loader import Scenario, get_laboratory_settings, read_config
from src.errors import ConfigError, LaboratoryError
from src.laboratory import Laboratory, ScenarioReport
from src.verification import available_checks

# --- Exit codes ---
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BLOW_UP = 3

BASE_DIR = os.path.dirname(os.path.abspath(__file__))
logger = logging.getLogger(__name__)


# --- Helper Functions ---
def _setup_logging(log_level: str = "INFO", log_dir: str = "logs"):
    if not os.path.isabs(log_dir):
        log_dir = os.path.join(BASE_DIR, log_dir)
    os.makedirs(log_dir, exist_ok=True)
    logging.basicConfig(
        level=getattr(logging, log_level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(os.path.join(log_dir, 'laboratory.log')),
            logging.StreamHandler(sys.stderr)
        ]
    )
    logging.getLogger('joblib').setLevel(logging.WARNING)
    logger.info("Global logging configured.")


def _with_prefix(scenarios: List[Scenario], out: Optional[str]) -> List[Scenario]:
    if out is None:
        return scenarios
    if len(scenarios) == 1:
        return [scenarios[0].model_copy(update={"output_prefix": out})]
    return [s.model_copy(update={"output_prefix": f"{out}_{s.name}"}) for s in scenarios]


def _summarize(report: ScenarioReport) -> List[str]:
    lines = []
    for member in report.members:
        title = f"{report.name}[{member.label}]" if member.label else report.name
        series = member.series
        status = series.status
        if status == "blow_up":
            status = f"blow_up at t={series.status_time:.6g}"
        elif status == "check_failed":
            status = f"check_failed ({series.failed_check}, margin {series.failed_margin:.3e}) at t={series.status_time:.6g}"
        lines.append(f"{title}: {status}, {len(series.records)} records -> {member.prefix}")
        for verdict in member.verdicts:
            lines.append(f"  {verdict.name}: {verdict.holds_label} (margin {verdict.worst_margin:.3e}, tol {verdict.tolerance:.1e})")
    for verdict in report.composite:
        lines.append(f"{report.name}: {verdict.name}: {verdict.holds_label} (margin {verdict.worst_margin:.3e})")
    return lines


# --- Scenario execution ---
def execute(scenarios: List[Scenario], check_only: bool = False, n_jobs: int = 1) -> int:
    """
    Runs (or, with ``check_only``, re-checks) every scenario and prints a summary.

    Returns 0 if every applicable check holds, 1 if one fails, 2 on an I/O
    failure and 3 if any run blew up (3 wins over 1).
    """
    laboratory = Laboratory(n_jobs=n_jobs)
    reports = []
    try:
        for scenario in scenarios:
            if check_only:
                reports.append(laboratory.check_scenario(scenario))
            else:
                reports.append(laboratory.run_scenario(scenario))
    except (OSError, LaboratoryError) as e:
        logger.error(f"Scenario execution failed: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    for report in reports:
        for line in _summarize(report):
            print(line)

    if any(report.blow_up_times for report in reports):
        return EXIT_BLOW_UP
    if any(report.failed for report in reports):
        return EXIT_CHECK_FAILED
    return EXIT_OK


# --- Main Entry Point ---
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Spectral laboratory for 1D transport equations with nonlocal velocity.")
    parser.add_argument("--config", type=str, help="Scenario document (INI format).")
    parser.add_argument("--scenario", type=str, help="Run only the named scenario.")
    parser.add_argument("--out", type=str, help="Output prefix (overrides output_prefix).")
    parser.add_argument("--check-only", action="store_true", help="Re-evaluate verdicts on existing series files.")
    parser.add_argument("--seed", type=int, help="Seed for random initial data.")
    parser.add_argument("--list-checks", action="store_true", help="List the available checks and exit.")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.list_checks:
        for name in available_checks():
            print(name)
        return EXIT_OK

    settings = get_laboratory_settings()
    _setup_logging(settings.log_level, settings.log_dir)

    if not args.config:
        print("error: --config is required", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_USAGE

    try:
        scenarios = read_config(args.config, seed=args.seed)
    except (ConfigError, OSError) as e:
        logger.error(f"Could not load scenarios from {args.config}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    if args.scenario:
        scenarios = [s for s in scenarios if s.name == args.scenario]
        if not scenarios:
            print(f"error: no scenario named '{args.scenario}' in {args.config}", file=sys.stderr)
            return EXIT_USAGE

    return execute(_with_prefix(scenarios, args.out), check_only=args.check_only, n_jobs=settings.n_jobs)


if __name__ == '__main__':
    sys.exit(main())
