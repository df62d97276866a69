# src/config_loader.py

import configparser
import itertools
import logging
import os
import re
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.errors import ConfigError
from src.models.initial_data import Gaussian, PositiveBump, SlowDecay, TrigPolynomial, Zero
from src.models.params import ModelParams
from src.spectral_core import Grid
from src.timestepper import CflStep, FixedStep, RunConfig
from src.verification import CHECKS, available_checks

logger = logging.getLogger(__name__)

CONFIG_FILE_PATH = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'config.ini')

SWEEP_KEYS = {
    "sweep_epsilon_visc": "epsilon_visc",
    "sweep_n_points": "n_points",
    "sweep_dt": "dt",
    "sweep_delta": "delta",
    "sweep_gamma": "gamma",
    "sweep_alpha": "alpha",
}

SCENARIO_KEYS = {
    "model", "gamma", "delta", "nu", "epsilon_visc", "alpha", "critical_coupling", "nonlinear",
    "divergence_form", "n_points", "domain_length", "initial", "base", "amplitude", "bump_mode",
    "center", "width", "height", "seed", "degree", "target_a0", "eta", "mollify_eps", "window_eps",
    "t_final", "dt", "cfl", "scheme", "record_every", "weight_beta", "checks", "fatal_checks",
    "keep_fields", "perturbation_eta", "output_prefix",
} | set(SWEEP_KEYS)

REQUIRED_KEYS = ("model", "gamma", "t_final")

_PI_MULTIPLE = re.compile(r"^\s*([0-9]*\.?[0-9]*(?:[eE][-+]?[0-9]+)?)\s*\*?\s*pi\s*$")
_SECTION = re.compile(r"^\s*\[([^\]]+)\]")
_OPTION = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


# =============================================================================
# Laboratory-wide settings (config.ini)
# =============================================================================


class LaboratorySettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    log_level: str = "INFO"
    n_jobs: int = 1
    log_dir: str = "logs"


@lru_cache(maxsize=None)
def get_laboratory_settings(path: str = CONFIG_FILE_PATH) -> LaboratorySettings:
    """
    Reads the [Laboratory] section of config.ini.
    Falls back to the defaults, with a warning, if the file, section or a key is missing.
    """
    defaults = LaboratorySettings()
    parser = configparser.ConfigParser()
    if not parser.read(path):
        logger.warning(f"config.ini not found at {path}. Using default laboratory settings.")
        return defaults
    try:
        section = parser['Laboratory']
    except KeyError:
        logger.warning("Could not find [Laboratory] section in config.ini. Using default laboratory settings.")
        return defaults

    settings = {}
    for key, default in defaults.model_dump().items():
        if key not in section:
            logger.warning(f"Key '{key}' missing from [Laboratory] in config.ini. Using fallback {default!r}.")
            continue
        settings[key] = section.getint(key) if isinstance(default, int) else section.get(key)
    return LaboratorySettings(**settings)


# =============================================================================
# Scenarios
# =============================================================================


class Scenario(BaseModel):
    """One named section of a scenario document: a base run plus optional sweeps."""

    model_config = ConfigDict(frozen=True)

    name: str
    run: RunConfig
    sweeps: Dict[str, List[float]] = Field(default_factory=dict)
    output_prefix: str
    perturbation_eta: Optional[float] = Field(default=None, gt=0.0)
    fatal_checks: List[str] = Field(default_factory=list)

    @field_validator("sweeps")
    @classmethod
    def validate_sweeps(cls, v: Dict[str, List[float]]) -> Dict[str, List[float]]:
        for key, values in v.items():
            if key not in SWEEP_KEYS.values():
                raise ValueError(f"cannot sweep over '{key}'")
            if not values:
                raise ValueError(f"sweep over '{key}' is empty")
        return v

    @model_validator(mode="after")
    def validate_checks(self) -> "Scenario":
        for name in self.fatal_checks:
            if name not in CHECKS:
                raise ValueError(f"fatal check '{name}' must be one of {', '.join(CHECKS)}")
        if "two_run_stability" in self.run.checks or "perturbation_scaling" in self.run.checks:
            if self.perturbation_eta is None:
                raise ValueError("two_run_stability and perturbation_scaling need perturbation_eta")
        if self.perturbation_eta is not None and not isinstance(self.run.dt_policy, FixedStep):
            raise ValueError("paired perturbation runs need a fixed dt so that record times coincide")
        if "regularization_convergence" in self.run.checks and len(self.sweeps.get("epsilon_visc", [])) < 3:
            raise ValueError("regularization_convergence needs sweep_epsilon_visc with at least three values")
        return self

    def members(self) -> List[Tuple[str, RunConfig]]:
        """(label, RunConfig) for every point of the cartesian product of the sweeps."""
        if not self.sweeps:
            return [("", self.run)]
        keys = list(self.sweeps)
        members = []
        for combination in itertools.product(*(self.sweeps[key] for key in keys)):
            overrides = dict(zip(keys, combination))
            label = "_".join(f"{key}{value:g}" for key, value in overrides.items())
            members.append((label, _apply_overrides(self.run, overrides)))
        return members


def _apply_overrides(run: RunConfig, overrides: Dict[str, float]) -> RunConfig:
    params = run.params
    grid = run.grid
    dt_policy = run.dt_policy
    param_updates = {key: overrides[key] for key in ("epsilon_visc", "delta", "gamma") if key in overrides}
    if "alpha" in overrides:
        param_updates["velocity"] = params.velocity.model_copy(update={"alpha": overrides["alpha"]})
    if param_updates:
        params = ModelParams(**{**params.model_dump(), **param_updates})
    if "n_points" in overrides:
        grid = Grid.create(int(overrides["n_points"]), grid.domain_length)
    if "dt" in overrides:
        dt_policy = FixedStep(dt=overrides["dt"])
    return run.model_copy(update={"params": params, "grid": grid, "dt_policy": dt_policy})


def _option_lines(text: str) -> Dict[Tuple[str, str], int]:
    """1-based line of every 'key = value' per section; DEFAULT options are listed under 'DEFAULT'."""
    lines: Dict[Tuple[str, str], int] = {}
    section = None
    for number, line in enumerate(text.splitlines(), start=1):
        header = _SECTION.match(line)
        if header:
            section = header.group(1).strip()
            continue
        option = _OPTION.match(line)
        if option and section is not None and not line[:1].isspace():
            lines.setdefault((section, option.group(1).strip().lower()), number)
    return lines


def parse_domain_length(text: str) -> float:
    """A float, or a multiple of pi written '32pi' or '32*pi'."""
    match = _PI_MULTIPLE.match(text)
    if match:
        factor = match.group(1)
        return (float(factor) if factor else 1.0) * np.pi
    return float(text)


def _parse_list(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


class _SectionReader:
    """Typed access to one section, raising ConfigError with the key's line."""

    def __init__(self, name: str, section: configparser.SectionProxy, lines: Dict[Tuple[str, str], int]):
        self.name = name
        self.section = section
        self.lines = lines

    def line(self, key: str) -> Optional[int]:
        return self.lines.get((self.name, key), self.lines.get(("DEFAULT", key)))

    def has(self, key: str) -> bool:
        return key in self.section

    def convert(self, key: str, convert, default):
        if key not in self.section:
            return default
        raw = self.section[key]
        try:
            return convert(raw)
        except ValueError:
            raise ConfigError(f"[{self.name}] cannot read '{key}' from {raw!r}", self.line(key))

    def get_float(self, key: str, default=None):
        return self.convert(key, float, default)

    def get_int(self, key: str, default=None):
        return self.convert(key, int, default)

    def get_str(self, key: str, default=None):
        return self.convert(key, str.strip, default)

    def get_bool(self, key: str, default: bool = False) -> bool:
        if key not in self.section:
            return default
        try:
            return self.section.getboolean(key)
        except ValueError:
            raise ConfigError(f"[{self.name}] '{key}' must be a boolean, got {self.section[key]!r}", self.line(key))

    def get_float_list(self, key: str) -> List[float]:
        return self.convert(key, lambda raw: [float(item) for item in _parse_list(raw)], [])


def _initial_shape(reader: _SectionReader, seed: Optional[int]):
    kind = reader.get_str("initial", "positive_bump")
    if kind == "positive_bump":
        return PositiveBump(
            base=reader.get_float("base", 2.0),
            amplitude=reader.get_float("amplitude", 1.0),
            mode=reader.get_int("bump_mode", 8),
        )
    if kind == "gaussian":
        return Gaussian(center=reader.get_float("center", 0.0), width=reader.get_float("width", 1.0), height=reader.get_float("height", 1.0))
    if kind == "trig_polynomial":
        return TrigPolynomial(
            seed=seed if seed is not None else reader.get_int("seed", 0),
            degree=reader.get_int("degree", 5),
            target_a0=reader.get_float("target_a0", 0.2),
        )
    if kind == "slow_decay":
        return SlowDecay(eta=reader.get_float("eta", 0.3))
    if kind == "zero":
        return Zero()
    raise ConfigError(f"[{reader.name}] unknown initial data kind '{kind}'", reader.line("initial"))


def _build_scenario(reader: _SectionReader, seed: Optional[int]) -> Scenario:
    for key in REQUIRED_KEYS:
        if not reader.has(key):
            raise ConfigError(f"[{reader.name}] missing required key '{key}'")

    model = reader.get_str("model")
    velocity = {"kind": model, "alpha": reader.get_float("alpha", 0.0)}
    params = {
        "gamma": reader.get_float("gamma"),
        "delta": reader.get_float("delta", 1.0),
        "nu": reader.get_float("nu", 1.0),
        "epsilon_visc": reader.get_float("epsilon_visc", 0.0),
        "velocity": velocity,
        "critical_coupling": reader.get_bool("critical_coupling"),
        "nonlinear": reader.get_bool("nonlinear", True),
        "divergence_form": reader.get_bool("divergence_form"),
    }
    grid = {
        "n_points": reader.get_int("n_points", 1024),
        "domain_length": reader.convert("domain_length", parse_domain_length, 32.0 * np.pi),
    }
    initial = {
        "shape": _initial_shape(reader, seed),
        "mollify_eps": reader.get_float("mollify_eps"),
        "window_eps": reader.get_float("window_eps"),
    }
    if reader.has("dt"):
        dt_policy = FixedStep(dt=reader.get_float("dt"))
    else:
        dt_policy = CflStep(c=reader.get_float("cfl", 0.5))

    checks = reader.convert("checks", _parse_list, list(CHECKS))
    for name in checks:
        if name not in available_checks():
            raise ConfigError(f"[{reader.name}] unknown check '{name}'", reader.line("checks"))
    perturbation_eta = reader.get_float("perturbation_eta")
    if perturbation_eta is not None:
        checks = checks + [name for name in ("two_run_stability", "perturbation_scaling") if name not in checks]
    sweeps = {target: reader.get_float_list(key) for key, target in SWEEP_KEYS.items() if reader.has(key)}
    if len(sweeps.get("epsilon_visc", [])) >= 3 and "regularization_convergence" not in checks:
        checks = checks + ["regularization_convergence"]

    run = {
        "grid": grid,
        "params": params,
        "initial": initial,
        "t_final": reader.get_float("t_final"),
        "dt_policy": dt_policy,
        "record_every": reader.get_int("record_every", 10),
        "weight_beta": reader.get_float("weight_beta", 0.5),
        "checks": checks,
        "scheme": reader.get_str("scheme", "rk2"),
        "keep_fields": reader.get_bool("keep_fields") or perturbation_eta is not None,
    }
    return Scenario(
        name=reader.name,
        run=run,
        sweeps=sweeps,
        output_prefix=reader.get_str("output_prefix", reader.name),
        perturbation_eta=perturbation_eta,
        fatal_checks=reader.convert("fatal_checks", _parse_list, []),
    )


def _validation_error(name: str, exc: ValidationError, reader: _SectionReader) -> ConfigError:
    error = exc.errors()[0]
    location = [str(part) for part in error["loc"] if not isinstance(part, int)]
    field = ".".join(location) or "scenario"
    key = location[-1] if location else ""
    key = {"mode": "bump_mode", "kind": "model", "c": "cfl"}.get(key, key)
    return ConfigError(f"[{name}] invalid '{field}': {error['msg']}", reader.line(key))


def parse_config(text: str, seed: Optional[int] = None) -> List[Scenario]:
    """
    Parse a scenario document into validated Scenarios.

    Each section is one scenario; [DEFAULT] values apply to all of them.
    ``seed`` overrides the seed of trigonometric-polynomial initial data.

    Raises:
        ConfigError: On malformed input, unknown keys (with their line) or
                     parameter invariant violations (naming the field)
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario document: {exc.message}", getattr(exc, "lineno", None))

    lines = _option_lines(text)
    scenarios = []
    for name in parser.sections():
        reader = _SectionReader(name, parser[name], lines)
        for key in parser[name]:
            if key not in SCENARIO_KEYS:
                raise ConfigError(f"[{name}] unknown key '{key}'", reader.line(key))
        try:
            scenario = _build_scenario(reader, seed)
            members = scenario.members()
        except ValidationError as exc:
            raise _validation_error(name, exc, reader)
        logger.info(f"Parsed scenario '{name}' with {len(members)} member run(s).")
        scenarios.append(scenario)

    if not scenarios:
        logger.warning("Scenario document holds no sections.")
    return scenarios


def read_config(path: str, seed: Optional[int] = None) -> List[Scenario]:
    """parse_config on the contents of ``path``; OSError propagates to the caller."""
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read(), seed)
