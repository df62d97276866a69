import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict

from src.config_loader import Scenario
from src.functionals import WeightParams
from src.models.params import ModelParams
from src.results_store import read_series, write_series, write_verdicts
from src.timestepper import Monitor, RunConfig, TimeSeries, run
from src.verification import (
    CHECKS,
    COMPOSITE_CHECKS,
    EstimateVerdict,
    check_regularization_convergence,
    perturbation_scaling,
    run_checks,
    two_run_stability,
)

logger = logging.getLogger(__name__)

PERTURBATION_RATIO = 10.0


class MemberResult(BaseModel):
    """One executed (or re-checked) run of a scenario."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    scenario: str
    label: str
    prefix: str
    config: RunConfig
    series: TimeSeries
    verdicts: List[EstimateVerdict]

    @property
    def status(self) -> str:
        return self.series.status


class ScenarioReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    prefix: str
    members: List[MemberResult]
    composite: List[EstimateVerdict] = []

    @property
    def verdicts(self) -> List[EstimateVerdict]:
        return [v for member in self.members for v in member.verdicts] + list(self.composite)

    @property
    def blow_up_times(self) -> List[float]:
        return [m.series.status_time for m in self.members if m.status == "blow_up"]

    @property
    def failed(self) -> bool:
        return any(v.failed for v in self.verdicts) or any(m.status == "check_failed" for m in self.members)


def fatal_monitor(params: ModelParams, weight: WeightParams, names: Sequence[str]) -> Optional[Monitor]:
    """Monitor that stops a run at the first record where a fatal check fails."""
    if not names:
        return None

    def monitor(series: TimeSeries) -> Optional[Tuple[str, float]]:
        for name in names:
            verdict = CHECKS[name](series, params, weight)
            if verdict.failed:
                return name, verdict.worst_margin
        return None

    return monitor


def evaluate(series: TimeSeries, cfg: RunConfig) -> List[EstimateVerdict]:
    return run_checks(series, cfg.params, cfg.checks, WeightParams(beta=cfg.weight_beta))


def _l2_distance(a: np.ndarray, b: np.ndarray, dx: float) -> float:
    return float(np.sqrt(dx * np.sum((a - b) ** 2)))


def perturbation_verdicts(cfg: RunConfig, base: TimeSeries, eta: float, prefix: str) -> List[EstimateVerdict]:
    """
    Reruns ``cfg`` with the initial data shifted by perturbations of L^2 size
    eta and eta/10, then evaluates the two-run stability envelope (size eta)
    and the linear scaling of the terminal differences.
    """
    perturbed: Dict[float, TimeSeries] = {}
    for size in (eta, eta / PERTURBATION_RATIO):
        initial = cfg.initial.model_copy(update={"perturbation_eta": cfg.initial.perturbation_eta + size})
        series = run(cfg.model_copy(update={"initial": initial, "keep_fields": True}))
        write_series(series, f"{prefix}_eta{size:g}")
        perturbed[size] = series

    if any(series.status != "completed" for series in (base, *perturbed.values())):
        logger.warning(f"Skipping perturbation verdicts for '{prefix}': not every paired run completed.")
        return []

    verdicts = [two_run_stability(base, perturbed[eta], cfg.params)]
    dx = cfg.grid.dx
    small = eta / PERTURBATION_RATIO
    verdicts.append(
        perturbation_scaling(
            _l2_distance(base.final_values, perturbed[small].final_values, dx),
            small,
            _l2_distance(base.final_values, perturbed[eta].final_values, dx),
            eta,
        )
    )
    return verdicts


def run_member(
    scenario: str,
    label: str,
    prefix: str,
    cfg: RunConfig,
    fatal_checks: Sequence[str] = (),
    perturbation_eta: Optional[float] = None,
) -> MemberResult:
    """Runs one member, evaluates its checks and writes its series and verdict files."""
    weight = WeightParams(beta=cfg.weight_beta)
    series = run(cfg, fatal_monitor(cfg.params, weight, fatal_checks))
    verdicts = evaluate(series, cfg)
    if perturbation_eta is not None:
        verdicts += perturbation_verdicts(cfg, series, perturbation_eta, prefix)
    write_series(series, prefix)
    write_verdicts(verdicts, prefix)
    return MemberResult(scenario=scenario, label=label, prefix=prefix, config=cfg, series=series, verdicts=verdicts)


def regularization_verdicts(members: Sequence[MemberResult]) -> List[EstimateVerdict]:
    """Convergence in epsilon_visc, evaluated separately for every setting of the other swept parameters."""
    groups: Dict[str, List[MemberResult]] = {}
    for member in members:
        if member.status != "completed":
            continue
        reference = member.config.model_copy(update={"params": member.config.params.model_copy(update={"epsilon_visc": 0.0})})
        groups.setdefault(reference.model_dump_json(), []).append(member)

    verdicts = []
    for index, group in enumerate(groups.values()):
        verdict = check_regularization_convergence(
            [m.config.params.epsilon_visc for m in group],
            [m.series.final_field() for m in group],
        )
        if len(groups) > 1:
            verdict = verdict.model_copy(update={"name": f"{verdict.name}[{index}]"})
        verdicts.append(verdict)
    return verdicts


class Laboratory:
    """
    Executes scenarios: expands sweeps into member runs, runs them (in
    parallel when n_jobs > 1), evaluates the verdicts and writes the files.
    """

    def __init__(self, n_jobs: int = 1):
        self.n_jobs = n_jobs
        logger.info(f"Laboratory initialized with n_jobs={n_jobs}")

    @staticmethod
    def member_prefix(scenario: Scenario, label: str) -> str:
        return f"{scenario.output_prefix}_{label}" if label else scenario.output_prefix

    def run_scenario(self, scenario: Scenario) -> ScenarioReport:
        members = scenario.members()
        logger.info(f"Starting scenario '{scenario.name}' with {len(members)} member run(s).")
        results = Parallel(n_jobs=self.n_jobs)(
            delayed(run_member)(
                scenario.name,
                label,
                self.member_prefix(scenario, label),
                cfg,
                scenario.fatal_checks,
                scenario.perturbation_eta,
            )
            for label, cfg in members
        )

        composite: List[EstimateVerdict] = []
        if "regularization_convergence" in scenario.run.checks:
            composite = regularization_verdicts(results)
        if composite:
            write_verdicts(composite, scenario.output_prefix)
        logger.info(f"Scenario '{scenario.name}' finished.")
        return ScenarioReport(name=scenario.name, prefix=scenario.output_prefix, members=results, composite=composite)

    def check_scenario(self, scenario: Scenario) -> ScenarioReport:
        """Re-evaluates single-series verdicts on the stored series of every member."""
        skipped = [name for name in scenario.run.checks if name in COMPOSITE_CHECKS]
        if skipped:
            logger.warning(f"Check-only mode cannot evaluate {skipped} for '{scenario.name}'; they need the runs.")
        results = []
        for label, cfg in scenario.members():
            prefix = self.member_prefix(scenario, label)
            series = read_series(prefix)
            verdicts = evaluate(series, cfg)
            write_verdicts(verdicts, prefix)
            results.append(
                MemberResult(scenario=scenario.name, label=label, prefix=prefix, config=cfg, series=series, verdicts=verdicts)
            )
        return ScenarioReport(name=scenario.name, prefix=scenario.output_prefix, members=results)
