"""Command-line client for the fitting service.

Every subcommand builds a JSON request and posts it to the service: an
in-process instance by default, or a remote one via --server. File I/O
stays on the client side so the service never touches the filesystem.

Exit codes: 0 success; 1 internal failure; 2 validation error (bad flags,
bad data, malformed model); 3 quality gate failed (fit not certified to
the requested epsilon, or a check run over threshold).

Epsilon is measured in nats of total (summed over observations, not
averaged) empirical risk. The environment variable LIPREG_SEED overrides
the default seed of the randomized subcommands.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys

import httpx

from . import __version__
from .service.app import create_app

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_NOT_CERTIFIED = 3

DEFAULT_SEED = 7


class ServiceClient:
    """POST requests either in-process or to a remote server."""

    def __init__(self, server: str | None = None, timeout: float = 600.0):
        self.server = server
        self.timeout = timeout

    def post(self, path: str, payload: dict) -> tuple[int, dict]:
        if self.server is None:
            return self._post_in_process(path, payload)
        with httpx.Client(base_url=self.server, timeout=self.timeout) as client:
            resp = client.post(path, json=payload)
            return resp.status_code, resp.json()

    def _post_in_process(self, path: str, payload: dict) -> tuple[int, dict]:
        async def run():
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(
                transport=transport, base_url="http://lipreg.local"
            ) as client:
                return await client.post(path, json=payload)

        resp = asyncio.run(run())
        return resp.status_code, resp.json()


def _default_seed() -> int:
    raw = os.environ.get("LIPREG_SEED")
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError as exc:
        raise SystemExit(f"error: LIPREG_SEED must be an integer, got {raw!r}") from exc


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _CliError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise _CliError(f"cannot write {path}: {exc.strerror or exc}") from exc


class _CliError(Exception):
    """Client-side validation failure; maps to exit 2."""


def _report_service_error(status: int, body: dict) -> int:
    detail = body.get("detail", body)
    name = body.get("error", "error")
    print(f"error ({name}): {detail}", file=sys.stderr)
    if status in (400, 422):
        return EXIT_VALIDATION
    return EXIT_INTERNAL


def cmd_fit(args) -> int:
    payload = {
        "csv_text": _read_text(args.input),
        "mode": args.mode,
        "lipschitz": args.lipschitz,
        "epsilon": args.epsilon,
        "normalize": not args.no_normalize,
        "norm_p": args.norm_p,
        "with_trace": args.trace is not None,
    }
    if args.max_iter is not None:
        payload["max_iter"] = args.max_iter
    if args.auto_theta:
        if args.theta is not None:
            raise _CliError("--theta and --auto-theta are mutually exclusive")
        if args.ddim is None:
            raise _CliError("--auto-theta requires --ddim")
        payload["auto_theta"] = True
    else:
        if args.theta is None:
            raise _CliError("one of --theta or --auto-theta is required")
        payload["theta"] = args.theta
    if args.ddim is not None:
        payload["ddim"] = args.ddim

    status, body = ServiceClient(args.server).post("/fit", payload)
    if status != 200:
        return _report_service_error(status, body)
    summary = body["summary"]
    _write_text(args.output, json.dumps(body["model"], indent=1) + "\n")
    if args.trace is not None:
        meta = {
            "format": "lipreg-trace",
            "version": 1,
            "n": summary["n"],
            "lipschitz": summary["lipschitz"],
            "theta": summary["theta"],
            "epsilon": summary["epsilon"],
        }
        lines = [json.dumps(meta)]
        lines += [json.dumps(rec) for rec in body["trace"]]
        _write_text(args.trace, "\n".join(lines) + "\n")
    print(f"points: {summary['n']} (from {summary['n_observations']} observations)")
    print(f"theta: {summary['theta']}")
    print(f"lipschitz: {summary['lipschitz']}")
    print(f"iterations: {summary['iterations']}")
    print(f"total risk: {summary['risk']} nats")
    print(f"certificate: {summary['certificate']} nats (requested {summary['epsilon']})")
    print(f"model written: {args.output}")
    if not summary["certified"]:
        print("warning: iteration cap reached before certification", file=sys.stderr)
        return EXIT_NOT_CERTIFIED
    return EXIT_OK


def cmd_predict(args) -> int:
    payload = {
        "model": json.loads(_read_text(args.model)),
        "queries_csv": _read_text(args.queries),
    }
    status, body = ServiceClient(args.server).post("/predict", payload)
    if status != 200:
        return _report_service_error(status, body)
    lines = [f"# lipreg-predictions v1 theta={body['theta']} count={len(body['ids'])}"]
    lines.append("id,prediction")
    for qid, pred in zip(body["ids"], body["predictions"]):
        lines.append(f"{qid},{pred}")
    _write_text(args.output, "\n".join(lines) + "\n")
    print(f"predictions written: {args.output} ({len(body['ids'])} rows)")
    return EXIT_OK


def cmd_eval(args) -> int:
    payload = {
        "model": json.loads(_read_text(args.model)),
        "test_csv": _read_text(args.test),
        "delta": args.delta,
    }
    status, body = ServiceClient(args.server).post("/evaluate", payload)
    if status != 200:
        return _report_service_error(status, body)
    print(f"holdout points: {body['n_test']}")
    print(f"mean risk: {body['mean_risk_nats']} nats")
    if body["diagnostic_bound"] is not None:
        print(f"diagnostic bound: {body['diagnostic_bound']} ({body['bound_note']})")
    else:
        print(f"diagnostic bound: unavailable ({body['bound_note']})")
    return EXIT_OK


def cmd_check(args) -> int:
    payload = {
        "seed": args.seed if args.seed is not None else _default_seed(),
        "instances": args.instances,
        "epsilon": args.epsilon,
        "oracle_tol": args.oracle_tol,
        "n_min": args.n_min,
        "n_max": args.n_max,
    }
    status, body = ServiceClient(args.server).post("/check", payload)
    if status != 200:
        return _report_service_error(status, body)
    print(f"instances: {body['instances']} (seed {body['seed']})")
    print(f"max objective gap: {body['max_gap']} (threshold {body['threshold']})")
    print(f"step-size contract violations: {body['lambda_violations']}")
    print(f"certificate violations: {body['cert_violations']}")
    print("PASS" if body["passed"] else "FAIL")
    return EXIT_OK if body["passed"] else EXIT_NOT_CERTIFIED


def _lb_sim_csv(body: dict) -> str:
    fields = {
        "construction": body["construction"],
        "trials": body["trials"],
        "successes": body["successes"],
        "estimate": body["estimate"],
        "wilson_low": body["wilson_low"],
        "wilson_high": body["wilson_high"],
    }
    for src in ("params", "extras"):
        for key, value in body[src].items():
            fields[f"{src}.{key}"] = value
    header = ",".join(fields)
    row = ",".join(str(v) for v in fields.values())
    return f"# lipreg-lbsim v1\n{header}\n{row}\n"


def cmd_lb_sim(args) -> int:
    payload = {
        "construction": args.construction,
        "n": args.n,
        "trials": args.trials,
        "seed": args.seed if args.seed is not None else _default_seed(),
    }
    if args.eps is not None:
        payload["eps"] = args.eps
    if args.C is not None:
        payload["c_bits"] = args.C
    status, body = ServiceClient(args.server).post("/lb-sim", payload)
    if status != 200:
        return _report_service_error(status, body)
    print(f"construction: {body['construction']}")
    print(f"params: {body['params']}")
    print(f"successes: {body['successes']} / {body['trials']}")
    print(f"estimate: {body['estimate']}")
    print(f"wilson 95%: [{body['wilson_low']}, {body['wilson_high']}]")
    for key, value in body["extras"].items():
        print(f"{key}: {value}")
    if args.output is not None:
        if args.output.endswith(".csv"):
            _write_text(args.output, _lb_sim_csv(body))
        else:
            doc = {"format": "lipreg-lbsim", "version": 1}
            doc.update(body)
            _write_text(args.output, json.dumps(doc, indent=1) + "\n")
        print(f"report written: {args.output}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lipreg",
        description="Lipschitz-constrained probability regression on metric data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--server", default=None, help="remote service URL (default: in-process)")

    p_fit = sub.add_parser("fit", parents=[common], help="fit a model from labeled CSV data")
    p_fit.add_argument("--input", required=True, help="labeled CSV (coords or distance matrix)")
    p_fit.add_argument("--mode", choices=("coords", "matrix"), default="coords")
    p_fit.add_argument("--lipschitz", type=float, required=True, help="Lipschitz constant L > 0")
    p_fit.add_argument("--theta", type=float, default=None, help="truncation level in (0, 0.5)")
    p_fit.add_argument("--auto-theta", action="store_true",
                       help="use the n**(-1/(ddim+2)) rate (requires --ddim)")
    p_fit.add_argument("--ddim", type=float, default=None, help="doubling dimension >= 1")
    p_fit.add_argument("--epsilon", type=float, default=1e-4,
                       help="certified suboptimality in nats of total risk")
    p_fit.add_argument("--max-iter", type=int, default=None)
    p_fit.add_argument("--output", required=True, help="model file path")
    p_fit.add_argument("--trace", default=None, help="write per-iteration JSONL trace here")
    p_fit.add_argument("--no-normalize", action="store_true",
                       help="keep distances in original units")
    p_fit.add_argument("--norm-p", type=float, default=2.0,
                       help="p-norm for coordinate distances")
    p_fit.set_defaults(func=cmd_fit)

    p_pred = sub.add_parser("predict", parents=[common], help="predict at query points")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--queries", required=True,
                        help="CSV of query rows (coords or distances, matching the model)")
    p_pred.add_argument("--output", required=True, help="predictions CSV path")
    p_pred.set_defaults(func=cmd_predict)

    p_eval = sub.add_parser("eval", parents=[common], help="holdout risk of a fitted model")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--test", required=True, help="labeled holdout CSV")
    p_eval.add_argument("--delta", type=float, default=0.05,
                        help="confidence level for the diagnostic bound")
    p_eval.set_defaults(func=cmd_eval)

    p_check = sub.add_parser("check", parents=[common],
                             help="validate the solver against reference oracles")
    p_check.add_argument("--seed", type=int, default=None)
    p_check.add_argument("--instances", type=int, default=50)
    p_check.add_argument("--epsilon", type=float, default=1e-4)
    p_check.add_argument("--oracle-tol", type=float, default=1e-5)
    p_check.add_argument("--n-min", type=int, default=2)
    p_check.add_argument("--n-max", type=int, default=10)
    p_check.set_defaults(func=cmd_check)

    p_sim = sub.add_parser("lb-sim", parents=[common],
                           help="run a lower-bound construction simulation")
    p_sim.add_argument("construction", choices=("realizable", "agnostic", "binom-gap"))
    p_sim.add_argument("--n", type=int, required=True, help="sample size per trial")
    p_sim.add_argument("--trials", type=int, default=100_000)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--eps", type=float, default=None,
                       help="target excess risk (realizable construction)")
    p_sim.add_argument("--C", type=float, default=None,
                       help="truncation exponent in bits (agnostic construction)")
    p_sim.add_argument("--output", default=None, help="write a JSON (or .csv) report")
    p_sim.set_defaults(func=cmd_lb_sim)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8321)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help/--version and 2 for usage errors
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except httpx.HTTPError as exc:
        print(f"error: service request failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
