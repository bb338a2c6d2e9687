"""
Validated parameter sets for every stage of the fusion pipeline.
"""
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class _Params(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", validate_default=True)


class QlsParams(_Params):
    """Lighting suppression."""

    lam: float = Field(0.01, gt=0)
    # Absolute hard-shrink threshold; None means tau_relative * max gradient modulus of the input.
    tau: Optional[float] = Field(None, ge=0)
    tau_relative: float = Field(0.05, ge=0)
    mu2_init: float = Field(0.1, gt=0)
    mu2_growth: float = Field(5.0, ge=1)
    mu2_cap: float = Field(1e6, gt=0)
    tol: float = Field(1e-5, gt=0)
    max_iter: int = Field(30, ge=1)
    domain: Literal["quaternion", "channelwise"] = "quaternion"


class QlrdParams(_Params):
    """Low-rank plus detail decomposition."""

    alpha: float = Field(1.0, gt=0)
    beta: float = Field(0.1, gt=0)
    gamma: float = Field(100.0, gt=0)
    p: float = Field(1.0, gt=0, le=1)
    n: int = Field(10, ge=0)
    rank: Optional[int] = Field(None, ge=1)
    mu1_init: float = Field(0.5, gt=0)
    mu1_growth: float = Field(1.1, ge=1)
    mu1_cap: float = Field(1e6, gt=0)
    tol: float = Field(1e-5, gt=0)
    max_iter: int = Field(20, ge=1)
    weight_floor: float = Field(1e-4, gt=0)
    penalty: Literal["pssv_wsp", "wsp", "nuclear"] = "pssv_wsp"

    @classmethod
    def infrared(cls, **overrides) -> "QlrdParams":
        return cls(**{"p": 1.0, "beta": 0.1, "n": 10, "mu1_init": 0.5, **overrides})

    @classmethod
    def visible(cls, **overrides) -> "QlrdParams":
        return cls(**{"p": 0.99, "beta": 0.01, "n": 5, "mu1_init": 0.1, **overrides})

    def resolve_rank(self, shape) -> int:
        limit = min(shape)
        if self.rank is None:
            return min(limit, max(4, limit // 8))
        return self.rank


class QaumMode(_Params):
    """Detail enhancement."""

    mode: Literal["summation", "adaptive"] = "summation"
    g_min: float = Field(0.5, ge=0)
    g_max: float = Field(1.5, ge=0)

    @model_validator(mode="after")
    def _ordered_gains(self):
        if self.g_min > self.g_max:
            raise ValueError("g_min must not exceed g_max")
        return self


class QhbfParams(_Params):
    """Hierarchical Bayesian fusion."""

    w1: float = Field(0.5, ge=0)
    w2: float = Field(0.5, ge=0)
    eps_s: float = Field(0.05, gt=0)
    eps_q: float = Field(0.05, gt=0)
    em_iters: int = Field(4, ge=1)
    inner_tol: float = Field(1e-6, gt=0)
    inner_max_iter: int = Field(200, ge=1)
    estep_variant: Literal["proportional", "reciprocal"] = "proportional"
    freeze_eps: bool = False

    @field_validator("estep_variant", mode="before")
    @classmethod
    def _variant_alias(cls, value):
        # legacy name of the default variant
        return "proportional" if value == "paper" else value


class PipelineParams(_Params):
    use_qls: bool = True
    use_qaum: bool = True
    fusion_rule: Literal["qhbf", "average"] = "qhbf"
    workers: int = Field(1, ge=1)

    @field_validator("workers")
    @classmethod
    def _sane_workers(cls, value):
        return min(value, 64)
