"""
Run Configuration

Sectioned YAML run files validated by pydantic models, with command-line
overrides of the form section.key=value.
"""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..exceptions import ConfigError
from ..hypotheses.potentials import (
    PotentialSpec,
    WeightSpec,
    builtin_potential,
    builtin_weight,
    cosine_profile,
    power_potential,
)
from ..operators.fracops import FracOrder
from ..variational.nehari import OptimizerOptions
from ..variational.solver import ProblemConfig

DEFAULT_CONFIG = Path(__file__).resolve().parents[2] / "configs" / "reference.yaml"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class ProblemSection(_Section):
    alpha: float = Field(0.75, gt=0.5, lt=1.0, description="Fractional order")
    n_components: int = Field(1, ge=1, description="Dimension n")
    lam: float = Field(100.0, gt=0.0, alias="lambda", description="λ for single solves")
    lambda_list: List[float] = Field([10.0, 100.0, 1000.0, 10000.0], min_length=1, description="Sweep values")
    T_end: float = Field(1.0, gt=0.0, description="T = [0, T_end]")
    truncation_R: float = Field(8.0, gt=0.0, description="Half-width of the truncated line")
    n_nodes: int = Field(2048, ge=3, description="Requested node count on [-R, R]")


class PotentialSection(_Section):
    name: Literal["two_power", "power"] = "two_power"
    theta: float = Field(3.0, gt=1.0)
    epsilon: float = Field(1.0, ge=0.0)
    a_amplitude: float = Field(1.0, gt=0.0)
    a_modulation: float = Field(0.0, ge=0.0, lt=1.0, description="Relative cosine modulation of a(t)")


class WeightSection(_Section):
    name: Literal["ramp"] = "ramp"
    c: float = Field(1.0, gt=0.0)
    l_max: float = Field(100.0, gt=0.0)
    J_lo: float = -0.25
    J_hi: float = 1.25
    ramp: float = Field(0.1, gt=0.0)
    vanishing_set: Literal["T", "J"] = "T"


class MultistartSection(_Section):
    starts: int = Field(20, ge=1)
    seed: int = 0


class SweepSection(_Section):
    warm_start: bool = True
    tail_mass_limit: float = Field(0.05, gt=0.0, le=1.0, description="Tail mass bound at the largest λ")
    h_alpha_distance_limit: float = Field(0.1, gt=0.0, description="Relative H^α distance bound at the largest λ")


class EmbeddingSection(_Section):
    c_inf: Optional[float] = Field(None, gt=0.0, description="Override for the sampled C_∞")
    samples: int = Field(64, ge=1)
    seed: int = 0


class RunConfig(_Section):
    problem: ProblemSection = Field(default_factory=ProblemSection)
    potential: PotentialSection = Field(default_factory=PotentialSection)
    weight: WeightSection = Field(default_factory=WeightSection)
    optimizer: OptimizerOptions = Field(default_factory=OptimizerOptions)
    multistart: MultistartSection = Field(default_factory=MultistartSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    embedding: EmbeddingSection = Field(default_factory=EmbeddingSection)

    @field_validator("problem")
    @classmethod
    def _ascending(cls, problem: ProblemSection) -> ProblemSection:
        values = problem.lambda_list
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("lambda_list must be strictly ascending")
        return problem

    def build_potential(self) -> PotentialSpec:
        p = self.potential
        bounds = (p.a_amplitude * (1.0 - p.a_modulation), p.a_amplitude * (1.0 + p.a_modulation))
        profile = cosine_profile(p.a_amplitude, p.a_modulation, self.problem.T_end)
        if p.name == "power":
            return power_potential(p.theta, profile, bounds)
        return builtin_potential(p.theta, p.epsilon, profile, bounds)

    def build_weight(self) -> WeightSpec:
        w = self.weight
        return builtin_weight(
            n=self.problem.n_components,
            c=w.c,
            l_max=w.l_max,
            j_lo=w.J_lo,
            j_hi=w.J_hi,
            t_end=self.problem.T_end,
            ramp=w.ramp,
            vanishing_set=w.vanishing_set,
        )

    def build_problem(self, lam: Optional[float] = None) -> ProblemConfig:
        return ProblemConfig(
            order=FracOrder(alpha=self.problem.alpha),
            lam=self.problem.lam if lam is None else lam,
            truncation_R=self.problem.truncation_R,
            t_end=self.problem.T_end,
            n_nodes=self.problem.n_nodes,
            n_components=self.problem.n_components,
            potential=self.build_potential(),
            weight=self.build_weight(),
            optimizer=self.optimizer,
            starts=self.multistart.starts,
            seed=self.multistart.seed,
            c_inf=self.embedding.c_inf,
            embedding_samples=self.embedding.samples,
            embedding_seed=self.embedding.seed,
        )

    def resolved(self) -> Dict[str, Any]:
        """Plain-data echo of the configuration after overrides"""
        return self.model_dump(mode="json", by_alias=True)


def apply_overrides(raw: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Apply section.key=value overrides; values are parsed as YAML scalars or lists"""
    data = {key: dict(value or {}) for key, value in raw.items()}
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not name:
            raise ConfigError(f"override {item!r} is not of the form section.key=value", field=key)
        if section not in RunConfig.model_fields:
            raise ConfigError(f"unknown section {section!r}", field=key)
        try:
            parsed = yaml.safe_load(value)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse override value {value!r}: {exc}", field=key) from exc
        data.setdefault(section, {})[name] = parsed
    return data


def parse_run_config(text: str, overrides: Sequence[str] = ()) -> RunConfig:
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"YAML parse error: {exc}", line=line) from exc
    if not isinstance(raw, dict):
        raise ConfigError("run configuration must be a mapping of sections")
    for section, body in raw.items():
        if body is not None and not isinstance(body, dict):
            raise ConfigError(f"section {section!r} must be a mapping", field=str(section))
    data = apply_overrides(raw, overrides)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        error = exc.errors()[0]
        field = ".".join(str(part) for part in error["loc"])
        raise ConfigError(f"invalid configuration at {field}: {error['msg']}", field=field) from exc


def load_run_config(path: Optional[Path] = None, overrides: Sequence[str] = ()) -> RunConfig:
    """
    Load a run configuration file

    Args:
        path: YAML file, defaults to configs/reference.yaml
        overrides: section.key=value strings applied after loading

    Returns:
        Validated RunConfig
    """
    path = Path(path) if path is not None else DEFAULT_CONFIG
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    return parse_run_config(text, overrides)
