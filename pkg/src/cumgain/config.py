"""Experiment configuration: JSON schema, strict parsing and resolution.

A config names a scenario (catalog name, catalog name with parameters, or an
inline means matrix), a list of policies and the run settings. Parsing rejects
unknown keys and reports every problem with the path of the offending field.

Example::

    {
      "scenario": {"name": "stationary", "params": {"means": [0.5, 0.45]}},
      "policy": ["cgse", {"kind": "ttts", "ttts_beta": 0.5, "label": "ttts-half"}],
      "replications": 100,
      "master_seed": 7
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Any, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Discriminator, Field, Tag, ValidationError, field_validator

from .environment import MEAN_FLOOR, EnvironmentSpec, Scenario, ScenarioKind
from .inference import ConfidenceConfig
from .policies import PolicyKind, PolicyTag
from .scenarios import get_scenario


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` holds ``(path, message)`` pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("\n".join(f"{path}: {msg}" if path else msg for path, msg in errors))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class NamedScenario(_Strict):
    name: str
    params: dict[str, Any] = Field(default_factory=dict)


class InlineScenario(_Strict):
    means: list[list[float]]
    daily_traffic: Optional[Union[int, list[int]]] = None
    label: str = "custom"

    @field_validator("means")
    @classmethod
    def _check_means(cls, means: list[list[float]]) -> list[list[float]]:
        if not means or not means[0]:
            raise ValueError("means must be a non-empty arms x days matrix")
        width = len(means[0])
        for i, row in enumerate(means):
            if len(row) != width:
                raise ValueError(f"means[{i}] has {len(row)} days, expected {width}")
            for t, value in enumerate(row):
                if not MEAN_FLOOR <= value <= 1.0 - MEAN_FLOOR:
                    raise ValueError(f"means[{i}][{t}] = {value} is outside (0, 1)")
        return means


def _scenario_shape(value: Any) -> str:
    if isinstance(value, str):
        return "name"
    if isinstance(value, dict) and "means" in value:
        return "inline"
    return "named"


ScenarioField = Annotated[
    Union[
        Annotated[str, Tag("name")],
        Annotated[NamedScenario, Tag("named")],
        Annotated[InlineScenario, Tag("inline")],
    ],
    Discriminator(_scenario_shape),
]


class PolicyConfig(_Strict):
    kind: PolicyTag
    label: Optional[str] = None
    ts_posterior_samples: int = 10_000
    ttts_beta: float = Field(0.5, gt=0.0, lt=1.0)
    delta: Optional[float] = Field(None, gt=0.0, lt=1.0)
    prior_a: float = Field(1.0, gt=0.0)
    prior_b: float = Field(1.0, gt=0.0)

    def to_kind(self) -> PolicyKind:
        return PolicyKind(
            tag=self.kind,
            ts_posterior_samples=self.ts_posterior_samples,
            ttts_beta=self.ttts_beta,
            cgse_delta=self.delta,
            prior_a=self.prior_a,
            prior_b=self.prior_b,
        )


PolicyField = Annotated[
    Union[Annotated[PolicyTag, Tag("name")], Annotated[PolicyConfig, Tag("object")]],
    Discriminator(lambda v: "name" if isinstance(v, (str, PolicyTag)) else "object"),
]


class ExperimentConfig(_Strict):
    scenario: ScenarioField
    policy: list[PolicyField] = Field(min_length=1)
    delta: float = Field(0.1, gt=0.0, lt=1.0)
    rho: float = Field(1.0, gt=0.0)
    replications: int = Field(100, ge=1)
    master_seed: int = Field(0, ge=0)
    horizon: Optional[int] = Field(None, ge=1)
    daily_traffic: Optional[Union[Annotated[int, Field(ge=1)], list[Annotated[int, Field(ge=1)]]]] = None
    output_dir: str = "results"
    continue_after_stop: bool = False
    emit_traces: bool = False
    workers: int = Field(1, ge=1)

    def policies(self) -> list[PolicyConfig]:
        return [PolicyConfig(kind=p) if isinstance(p, PolicyTag) else p for p in self.policy]


@dataclass(frozen=True, eq=False)
class ResolvedExperiment:
    """Everything a run needs, validated."""

    config: ExperimentConfig
    scenario_name: str
    spec: EnvironmentSpec
    policies: tuple[tuple[str, PolicyKind], ...]
    schedule: Optional[np.ndarray]

    @property
    def confidence(self) -> ConfidenceConfig:
        return ConfidenceConfig(self.config.delta, self.config.rho)


def _loc(loc: tuple) -> str:
    out = ""
    for part in loc:
        if part in ("name", "named", "inline", "object") and (out == "scenario" or out.startswith("policy[")):
            continue  # union tags
        if isinstance(part, int):
            out += f"[{part}]"
        else:
            out += f".{part}" if out else str(part)
    return out


def _from_validation(err: ValidationError) -> ConfigError:
    return ConfigError([(_loc(e["loc"]), e["msg"]) for e in err.errors()])


def _resolve_scenario(cfg: ExperimentConfig) -> tuple[str, EnvironmentSpec, Optional[np.ndarray]]:
    sc = cfg.scenario
    if isinstance(sc, InlineScenario):
        means = np.asarray(sc.means, dtype=np.float64)
        horizon = means.shape[1]
        if cfg.horizon is not None and cfg.horizon != horizon:
            raise ConfigError([("horizon", f"inline means cover {horizon} days, horizon says {cfg.horizon}")])
        if sc.daily_traffic is not None and cfg.daily_traffic is not None:
            raise ConfigError([("daily_traffic", "given both inline and at top level")])
        traffic = sc.daily_traffic if sc.daily_traffic is not None else cfg.daily_traffic
        if traffic is None:
            raise ConfigError([("scenario.daily_traffic", "required for an inline means matrix")])
        if np.ndim(traffic) == 0:
            traffic = [traffic] * horizon
        try:
            spec = EnvironmentSpec(means, np.asarray(traffic, dtype=np.int64), ScenarioKind(Scenario.CUSTOM))
        except ValueError as exc:
            raise ConfigError([("scenario", str(exc))]) from None
        return sc.label, spec, None

    name, params = (sc, {}) if isinstance(sc, str) else (sc.name, dict(sc.params))
    try:
        entry = get_scenario(name)
    except KeyError as exc:
        raise ConfigError([("scenario.name" if not isinstance(sc, str) else "scenario", exc.args[0])]) from None
    for key, value in (("horizon", cfg.horizon), ("traffic", cfg.daily_traffic)):
        if value is None:
            continue
        if key in params:
            top = "daily_traffic" if key == "traffic" else key
            raise ConfigError([(top, f"conflicts with scenario.params.{key}")])
        params[key] = value
    try:
        spec = entry.generate(**params)
        schedule = entry.scripted_schedule(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError([("scenario.params", str(exc))]) from None
    return name, spec, schedule


def resolve(cfg: ExperimentConfig) -> ResolvedExperiment:
    name, spec, schedule = _resolve_scenario(cfg)
    policies = []
    seen: dict[str, int] = {}
    for idx, pc in enumerate(cfg.policies()):
        label = pc.label or pc.kind.value
        if label in seen:
            raise ConfigError([(f"policy[{idx}].label", f"duplicate label {label!r} (also policy[{seen[label]}])")])
        seen[label] = idx
        try:
            policies.append((label, pc.to_kind()))
        except ValueError as exc:
            raise ConfigError([(f"policy[{idx}]", str(exc))]) from None
    return ResolvedExperiment(cfg, name, spec, tuple(policies), schedule)


def load_config(data: dict) -> ExperimentConfig:
    """Validate an already-decoded JSON object."""
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as err:
        raise _from_validation(err) from None
    resolve(cfg)
    return cfg


def parse_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"config file not found: {path}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"not valid JSON: {exc}")]) from None
    if not isinstance(data, dict):
        raise ConfigError([("", "top level must be a JSON object")])
    return load_config(data)
