"""HTTP service exposing fitting, prediction, evaluation, solver
validation, and the lower-bound simulations.

Input problems (bad CSV, infeasible parameters, malformed model documents)
map to 400; numerical failures that indicate a broken run (lost
conditioning, violated step-size contracts) map to 500. A fit that hits
its iteration cap still returns 200, flagged certified=false, so clients
can decide how to treat uncertified output.
"""

from __future__ import annotations

import dataclasses
import math

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..barrier import Polytope
from ..data import (
    default_theta,
    load_labeled_queries,
    load_query_matrix,
    load_query_points,
    load_sample,
)
from ..exceptions import (
    CertificateError,
    ConditioningError,
    DataError,
    DomainError,
    InvariantError,
    LipregError,
    ModelError,
    OracleError,
)
from ..experiments import (
    agnostic_lb_trial,
    binom_gap_trial,
    generalization_bound,
    realizable_lb_trial,
)
from ..objective import risk
from ..oracle import crosscheck
from ..predictor import (
    Model,
    extend,
    model_from_document,
    model_to_document,
    predict_batch,
    query_distances,
)
from ..solver import fit
from . import schemas

_CLIENT_ERRORS = (DataError, DomainError, ModelError, CertificateError)
_SERVER_ERRORS = (ConditioningError, InvariantError, OracleError)


def create_app() -> FastAPI:
    app = FastAPI(title="lipreg", version=__version__)

    @app.exception_handler(LipregError)
    def _lipreg_error(request: Request, exc: LipregError):
        status = 400 if isinstance(exc, _CLIENT_ERRORS) else 500
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/fit", response_model=schemas.FitResponse)
    def fit_endpoint(req: schemas.FitRequest):
        ingest = load_sample(
            req.csv_text, mode=req.mode, norm_p=req.norm_p, normalize=req.normalize
        )
        sample = ingest.sample
        if req.auto_theta:
            theta = default_theta(sample.n_observations, req.ddim)
        else:
            theta = req.theta
        poly = Polytope.from_sample(sample, req.lipschitz, theta)
        result = fit(sample, poly, req.epsilon, req.max_iter)
        model = Model(
            sample=sample,
            w_star=result.w_star,
            lipschitz_L=req.lipschitz,
            theta=theta,
            scale=sample.scale,
            mode=req.mode,
            coords=ingest.coords,
            norm_p=req.norm_p,
            ddim=req.ddim,
        )
        summary = schemas.FitSummary(
            n=sample.n,
            n_observations=sample.n_observations,
            lipschitz=req.lipschitz,
            theta=theta,
            epsilon=req.epsilon,
            iterations=result.iterations,
            certificate=result.epsilon_cert,
            certified=result.certified,
            risk=risk(result.w_star, sample).value,
        )
        trace = None
        if req.with_trace:
            trace = [dataclasses.asdict(rec) for rec in result.trace]
        return schemas.FitResponse(
            model=model_to_document(model), summary=summary, trace=trace
        )

    @app.post("/predict", response_model=schemas.PredictResponse)
    def predict_endpoint(req: schemas.PredictRequest):
        model = model_from_document(req.model)
        if model.mode == "coords":
            queries = load_query_points(req.queries_csv)
        else:
            queries = load_query_matrix(req.queries_csv, model.n)
        preds = predict_batch(model, queries) if len(queries) else []
        return schemas.PredictResponse(
            ids=list(range(len(queries))),
            predictions=[float(p) for p in preds],
            theta=model.theta,
        )

    @app.post("/evaluate", response_model=schemas.EvalResponse)
    def evaluate_endpoint(req: schemas.EvalRequest):
        model = model_from_document(req.model)
        values, labels = load_labeled_queries(req.test_csv, model.mode, model.n)
        if len(values) == 0:
            raise DataError("holdout set is empty")
        dists = query_distances(model, values)
        total = 0.0
        for row, y in zip(dists, labels):
            p = extend(model, row)
            total += -math.log(p) if y == 1.0 else -math.log1p(-p)
        bound = None
        if model.ddim is None:
            note = "no diagnostic bound: model carries no doubling dimension"
        elif model.lipschitz_L < 1.0:
            note = "no diagnostic bound: requires a Lipschitz constant >= 1"
        else:
            bound = generalization_bound(
                model.sample.n_observations,
                model.lipschitz_L,
                model.ddim,
                model.theta,
                req.delta,
            )
            note = f"excess-risk diagnostic at confidence 1 - {req.delta}"
        return schemas.EvalResponse(
            n_test=len(values),
            mean_risk_nats=total / len(values),
            diagnostic_bound=bound,
            bound_note=note,
        )

    @app.post("/check", response_model=schemas.CheckResponse)
    def check_endpoint(req: schemas.CheckRequest):
        report = crosscheck(
            seed=req.seed,
            instances=req.instances,
            epsilon=req.epsilon,
            oracle_tol=req.oracle_tol,
            n_min=req.n_min,
            n_max=req.n_max,
        )
        return schemas.CheckResponse(
            passed=report.passed,
            instances=len(report.results),
            max_gap=report.max_gap,
            threshold=report.threshold,
            lambda_violations=report.lambda_violations,
            cert_violations=report.cert_violations,
            seed=req.seed,
            details=[
                schemas.CheckInstance(
                    n=r.n,
                    lipschitz=r.lipschitz,
                    theta=r.theta,
                    iterations=r.iterations,
                    certificate=r.certificate,
                    certified=r.certified,
                    risk_gap=r.risk_gap,
                )
                for r in report.results
            ],
        )

    @app.post("/lb-sim", response_model=schemas.LbSimResponse)
    def lb_sim_endpoint(req: schemas.LbSimRequest):
        if req.construction == "realizable":
            eps = req.eps if req.eps is not None else 0.05
            report = realizable_lb_trial(req.n, eps, req.seed, req.trials)
        elif req.construction == "agnostic":
            c_bits = req.c_bits if req.c_bits is not None else 10.0 * req.n
            report = agnostic_lb_trial(req.n, c_bits, req.seed, req.trials)
        else:
            report = binom_gap_trial(req.n, req.seed, req.trials)
        return schemas.LbSimResponse(
            construction=req.construction,
            trials=report.trials,
            successes=report.successes,
            estimate=report.estimate,
            wilson_low=report.wilson_low,
            wilson_high=report.wilson_high,
            params=report.params,
            extras=report.extras,
        )

    return app
