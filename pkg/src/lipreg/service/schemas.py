"""Request and response bodies for the HTTP service.

CSV payloads travel as text fields so the service owns all parsing and
validation; clients (including the bundled CLI) stay thin.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator


class FitRequest(BaseModel):
    csv_text: str
    mode: Literal["coords", "matrix"] = "coords"
    lipschitz: float = Field(gt=0.0)
    theta: float | None = Field(default=None, gt=0.0, lt=0.5)
    auto_theta: bool = False
    ddim: float | None = Field(default=None, ge=1.0)
    epsilon: float = Field(default=1e-4, gt=0.0)
    max_iter: int | None = Field(default=None, ge=1)
    normalize: bool = True
    norm_p: float = Field(default=2.0, ge=1.0)
    with_trace: bool = False

    @model_validator(mode="after")
    def _theta_choice(self):
        if self.auto_theta == (self.theta is not None):
            raise ValueError("provide exactly one of theta or auto_theta")
        if self.auto_theta and self.ddim is None:
            raise ValueError("auto_theta requires ddim")
        return self


class FitSummary(BaseModel):
    n: int
    n_observations: int
    lipschitz: float
    theta: float
    epsilon: float
    iterations: int
    certificate: float
    certified: bool
    risk: float


class FitResponse(BaseModel):
    model: dict
    summary: FitSummary
    trace: list[dict] | None = None


class PredictRequest(BaseModel):
    model: dict
    queries_csv: str


class PredictResponse(BaseModel):
    ids: list[int]
    predictions: list[float]
    theta: float


class EvalRequest(BaseModel):
    model: dict
    test_csv: str
    delta: float = Field(default=0.05, gt=0.0, lt=1.0)


class EvalResponse(BaseModel):
    n_test: int
    mean_risk_nats: float
    diagnostic_bound: float | None = None
    bound_note: str


class CheckRequest(BaseModel):
    seed: int = 7
    instances: int = Field(default=50, ge=1, le=2000)
    epsilon: float = Field(default=1e-4, gt=0.0)
    oracle_tol: float = Field(default=1e-5, gt=0.0)
    n_min: int = Field(default=2, ge=1, le=12)
    n_max: int = Field(default=10, ge=1, le=12)

    @model_validator(mode="after")
    def _range(self):
        if self.n_min > self.n_max:
            raise ValueError("n_min must not exceed n_max")
        return self


class CheckInstance(BaseModel):
    n: int
    lipschitz: float
    theta: float
    iterations: int
    certificate: float
    certified: bool
    risk_gap: float


class CheckResponse(BaseModel):
    passed: bool
    instances: int
    max_gap: float
    threshold: float
    lambda_violations: int
    cert_violations: int
    seed: int
    details: list[CheckInstance]


class LbSimRequest(BaseModel):
    construction: Literal["realizable", "agnostic", "binom-gap"]
    n: int = Field(ge=1)
    trials: int = Field(default=100_000, ge=1)
    seed: int = 0
    eps: float | None = Field(default=None, gt=0.0)
    c_bits: float | None = Field(default=None, gt=0.0)


class LbSimResponse(BaseModel):
    construction: str
    trials: int
    successes: int
    estimate: float
    wilson_low: float
    wilson_high: float
    params: dict
    extras: dict


class HealthResponse(BaseModel):
    status: str
    version: str
