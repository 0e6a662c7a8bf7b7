"""Run configuration for the full pipeline.

The configuration is a JSON document validated by pydantic. Unknown keys are
rejected. Every field has a default, so ``{"data": "panel.csv"}`` is a
complete configuration. The configuration hash is the SHA-256 of the
canonical JSON dump (sorted keys, no whitespace) and is stamped into every
output file.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..errors import ConfigError

SCHEMA_VERSION = 1

Deterministic = Literal["none", "constant", "constant_trend"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class StationarityOptions(_Strict):
    max_lag: int = Field(1, ge=0)
    deterministic: Deterministic = "constant"
    ic: Optional[Literal["aic", "bic"]] = None
    pp_lags: Optional[int] = Field(None, ge=0)


class RollingOptions(_Strict):
    window: int = Field(8, ge=4)


class VarOptions(_Strict):
    p_max: int = Field(4, ge=1)
    criterion: Literal["aic", "bic"] = "bic"
    deterministic: Deterministic = "constant"
    granger_lag: int = Field(1, ge=1)
    johansen_lag: int = Field(2, ge=1)
    johansen_deterministic: Deterministic = "constant"


class PriorOptions(_Strict):
    tau: float = Field(0.7, gt=0)
    d_lambda: float = Field(0.01, gt=0)
    e_lambda: float = Field(0.01, gt=0)
    det_prior_var: float = Field(100.0, gt=0)
    sigma_df_extra: float = Field(2.0, gt=0)


class SamplerOptions(_Strict):
    draws: int = Field(1000, ge=100)
    burn: int = Field(1000, ge=0)
    thin: int = Field(1, ge=1)
    seed: int = Field(0, ge=0)
    stable_only: bool = True
    deterministic: Literal["constant", "constant_trend"] = "constant_trend"


class Constraint(_Strict):
    country: str
    variable: str
    value: Union[Literal["last"], float, list[Optional[float]]] = "last"


class ForecastOptions(_Strict):
    n_ahead: int = Field(5, ge=1)
    variable: Optional[str] = None          # charted variable; defaults to the first one
    paths_per_draw: int = Field(1, ge=1)
    constraints: list[Constraint] = Field(default_factory=list)
    half_width: float = Field(0.001, gt=0)
    girf_horizon: int = Field(8, ge=0)
    shock: Optional[Constraint] = None      # country/variable of the GIRF shock; value unused


class RunConfig(_Strict):
    schema_version: int = SCHEMA_VERSION
    data: Optional[str] = None
    weights: Optional[str] = None           # raw flows or weights CSV; uniform when absent
    weights_are_flows: bool = True
    countries: Optional[list[str]] = None
    variables: Optional[list[str]] = None
    interpolate: bool = False
    transform: Union[str, dict[str, str]] = Field(default_factory=dict)
    model_transform: Optional[Union[str, dict[str, str]]] = "log,diff"
    stationarity: StationarityOptions = StationarityOptions()
    rolling: RollingOptions = RollingOptions()
    var: VarOptions = VarOptions()
    prior: PriorOptions = PriorOptions()
    sampler: SamplerOptions = SamplerOptions()
    forecast: ForecastOptions = ForecastOptions()
    output: str = "report"

    @field_validator("schema_version")
    @classmethod
    def _known_schema(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v}; this build reads {SCHEMA_VERSION}")
        return v

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    @property
    def short_hash(self) -> str:
        return self.config_hash[:12]


def parse_config(data: dict | str) -> RunConfig:
    """Validate a mapping or a JSON string; problems raise ConfigError."""
    try:
        if isinstance(data, str):
            return RunConfig.model_validate_json(data)
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        lines = [f"{'.'.join(str(p) for p in e['loc']) or '<root>'}: {e['msg']}" for e in exc.errors()]
        raise ConfigError("invalid configuration: " + "; ".join(lines)) from None


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def save_config(config: RunConfig, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(config.to_json(), encoding="utf-8")
    return path
