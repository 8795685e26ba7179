"""Path-following interior-point minimization of the empirical log risk.

The solver tracks minimizers of f(w; t) = t * R(w) + F(w), where R is the
empirical risk and F the polytope barrier, while t grows. One iteration is

    t_next = t + gamma / ||grad R(w)||*        (local dual norm at (w, t))
    w_next = w - [hess f(w; t_next)]^{-1} grad f(w; t_next)

starting from the analytic center with t = 0. The composite f(.; t) is
standard self-concordant for every t >= 0: each weighted log-loss term
shares its coordinate with a unit-coefficient box log whose argument is
no larger, which caps the third-derivative ratio. Consequently, with
beta = tau^2/(1-tau)^2 and gamma <= tau - beta, the local dual norm
lambda of grad f stays <= tau after every t-increase and <= beta after
every Newton step, and once

    t >= (nu + beta*(beta+sqrt(nu))/(1-beta)) / epsilon

the final iterate's risk is within epsilon of the constrained optimum
(nu is the barrier parameter). Iterates stay strictly feasible; both
contract inequalities are checked at runtime and violations abort the fit.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cholesky as _cholesky
from scipy.linalg import solve_triangular

from . import objective
from .barrier import Polytope, analytic_center, barrier_eval, barrier_parameter
from .data import Sample
from .exceptions import CertificateError, ConditioningError, DataError, InvariantError

DEFAULT_MAX_ITER_FACTOR = 64


@dataclass(frozen=True)
class PathConstants:
    """Step-size constants (tau, gamma, beta).

    Requirements: 0 < tau <= 1/2, 0 < beta <= tau^2/(1-tau)^2 and
    0 < gamma <= tau - tau^2/(1-tau)^2, so that beta + gamma <= tau.
    """

    tau: float = 0.2291
    gamma: float = 0.14
    beta: float = 0.088

    def __post_init__(self):
        if not 0.0 < self.tau <= 0.5:
            raise DataError(f"tau must lie in (0, 0.5], got {self.tau}")
        cap = self.tau**2 / (1.0 - self.tau) ** 2
        if not 0.0 < self.beta <= cap + 1e-12:
            raise DataError(f"beta must lie in (0, tau^2/(1-tau)^2 = {cap:.6f}], got {self.beta}")
        if not 0.0 < self.gamma <= self.tau - cap + 1e-12:
            raise DataError(
                f"gamma must lie in (0, tau - tau^2/(1-tau)^2 = {self.tau - cap:.6f}], "
                f"got {self.gamma}"
            )


def _factor_spd(hessian) -> np.ndarray:
    """Lower Cholesky factor, or ConditioningError naming the failing pivot."""
    try:
        return _cholesky(hessian, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        found = re.search(r"(\d+)", str(exc))
        pivot = int(found.group(1)) if found else None
        raise ConditioningError(
            f"Hessian is not positive definite: {exc}", pivot=pivot
        ) from exc


def _dual_norm(chol_lower, g) -> float:
    """sqrt(g^T H^{-1} g) as the Euclidean norm of L^{-1} g."""
    y = solve_triangular(chol_lower, g, lower=True, check_finite=False)
    return float(np.linalg.norm(y))


def local_dual_norm(gradient, hessian) -> float:
    """Local dual norm sqrt(g^T H^{-1} g) for symmetric positive definite H."""
    g = np.asarray(gradient, dtype=float)
    h = np.asarray(hessian, dtype=float)
    if h.shape != (g.size, g.size):
        raise DataError(f"hessian shape {h.shape} does not match gradient size {g.size}")
    return _dual_norm(_factor_spd(h), g)


class _Eval:
    """Derivatives of f(.; t) at one iterate, factored once and reused."""

    __slots__ = ("risk", "grad", "chol")

    def __init__(self, w, t, sample, poly):
        self.risk = objective.risk(w, sample)
        bar = barrier_eval(w, poly)
        hess = bar.hessian.copy()
        idx = np.arange(len(w))
        hess[idx, idx] += t * self.risk.hessian_diag
        self.grad = t * self.risk.gradient + bar.gradient
        self.chol = _factor_spd(hess)


@dataclass(frozen=True)
class SolverState:
    """Iterate (w, t) with its iteration count, local dual norm of
    grad f(w; t), and current certificate value (inf while t = 0)."""

    w: np.ndarray
    t: float
    k: int
    lam: float
    cert_gap: float
    exact: bool = False
    cache: object = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class TraceRecord:
    k: int
    t: float
    lam_after_increase: float
    lam_after_step: float
    risk: float
    certificate: float


@dataclass(frozen=True)
class FitResult:
    w_star: np.ndarray
    iterations: int
    epsilon_cert: float
    certified: bool
    trace: tuple


def _certificate_value(t: float, nu: float, c: PathConstants) -> float:
    return (nu + c.beta * (c.beta + math.sqrt(nu)) / (1.0 - c.beta)) / t


def certificate(state: SolverState, nu: float, c: PathConstants = PathConstants()) -> float:
    """Risk suboptimality bound (nu + beta*(beta+sqrt(nu))/(1-beta)) / t.

    Valid whenever the state's lambda is at most beta. Undefined at t = 0.
    """
    if state.t <= 0.0:
        raise CertificateError("certificate is undefined at t = 0")
    return _certificate_value(state.t, nu, c)


def initial_state(sample: Sample, poly: Polytope) -> SolverState:
    """Analytic center at t = 0, where grad f = grad F = 0."""
    w0 = analytic_center(poly)
    ev = _Eval(w0, 0.0, sample, poly)
    lam = _dual_norm(ev.chol, ev.grad)
    return SolverState(w=w0, t=0.0, k=0, lam=lam, cert_gap=math.inf, cache=ev)


def _eval_at(state: SolverState, sample, poly) -> _Eval:
    if isinstance(state.cache, _Eval):
        return state.cache
    return _Eval(state.w, state.t, sample, poly)


def increase_t(
    state: SolverState, sample: Sample, poly: Polytope, c: PathConstants = PathConstants()
) -> SolverState:
    """Advance t by gamma / ||grad R(w)||* measured at the current (w, t).

    Requires lambda(w, t) <= beta on entry; guarantees lambda(w, t_next)
    <= tau on exit. A zero risk gradient means w already minimizes the
    risk exactly; the returned state is flagged ``exact``.
    """
    ev = _eval_at(state, sample, poly)
    risk_norm = _dual_norm(ev.chol, ev.risk.gradient)
    if risk_norm == 0.0:
        return replace(state, exact=True)
    t_next = state.t + c.gamma / risk_norm
    nu = barrier_parameter(poly)
    ev_next = _Eval(state.w, t_next, sample, poly)
    lam = _dual_norm(ev_next.chol, ev_next.grad)
    if lam > c.tau:
        raise InvariantError(
            f"lambda = {float(lam)!r} exceeds tau = {c.tau} after raising t to {float(t_next)!r}"
        )
    return SolverState(
        w=state.w,
        t=t_next,
        k=state.k,
        lam=lam,
        cert_gap=_certificate_value(t_next, nu, c),
        cache=ev_next,
    )


def newton_step(
    state: SolverState, sample: Sample, poly: Polytope, c: PathConstants = PathConstants()
) -> SolverState:
    """Full Newton step on f(.; t) at fixed t.

    Requires lambda(w, t) <= tau on entry; guarantees a strictly feasible
    iterate with lambda <= beta on exit.
    """
    ev = _eval_at(state, sample, poly)
    y = solve_triangular(ev.chol, ev.grad, lower=True, check_finite=False)
    direction = solve_triangular(ev.chol.T, y, lower=False, check_finite=False)
    w_next = state.w - direction
    violation = poly.first_violation(w_next)
    if violation is not None:
        raise InvariantError(f"Newton step left the feasible region: {violation}")
    ev_next = _Eval(w_next, state.t, sample, poly)
    lam = _dual_norm(ev_next.chol, ev_next.grad)
    if lam > c.beta:
        raise InvariantError(
            f"lambda = {float(lam)!r} exceeds beta = {c.beta} after the Newton step at t = {float(state.t)!r}"
        )
    nu = barrier_parameter(poly)
    cert = _certificate_value(state.t, nu, c) if state.t > 0.0 else math.inf
    return SolverState(
        w=w_next, t=state.t, k=state.k + 1, lam=lam, cert_gap=cert, cache=ev_next
    )


def default_max_iter(nu: float, n: int, epsilon: float) -> int:
    """Generous iteration cap 64 * sqrt(nu) * ln(nu * n / epsilon)."""
    return int(math.ceil(DEFAULT_MAX_ITER_FACTOR * math.sqrt(nu) * max(
        math.log(nu * max(n, 1) / epsilon), 1.0
    )))


def fit(
    sample: Sample,
    poly: Polytope,
    epsilon: float = 1e-4,
    max_iter: int | None = None,
    constants: PathConstants = PathConstants(),
) -> FitResult:
    """Minimize the empirical risk over the polytope to within epsilon.

    epsilon is in nats of total (summed, not averaged) empirical risk.
    Runs until the certificate (nu + beta*(beta+sqrt(nu))/(1-beta)) / t
    drops to epsilon, or max_iter is hit, in which case the result is
    returned flagged as not certified.
    """
    if epsilon <= 0.0:
        raise DataError(f"epsilon must be positive, got {epsilon}")
    if sample.n != poly.n:
        raise DataError(f"sample has {sample.n} points but polytope has {poly.n}")
    nu = barrier_parameter(poly)
    if max_iter is None:
        max_iter = default_max_iter(nu, sample.n, epsilon)
    threshold = nu + constants.beta * (constants.beta + math.sqrt(nu)) / (1.0 - constants.beta)
    t_stop = threshold / epsilon

    state = initial_state(sample, poly)
    trace: list[TraceRecord] = []
    certified = True
    epsilon_cert = None
    try:
        while state.t < t_stop:
            if state.k >= max_iter:
                certified = False
                break
            raised = increase_t(state, sample, poly, constants)
            if raised.exact:
                # zero risk gradient: w minimizes the risk over all of R^n
                epsilon_cert = 0.0
                break
            state = newton_step(raised, sample, poly, constants)
            trace.append(
                TraceRecord(
                    k=state.k,
                    t=state.t,
                    lam_after_increase=raised.lam,
                    lam_after_step=state.lam,
                    risk=state.cache.risk.value,
                    certificate=state.cert_gap,
                )
            )
    except InvariantError as exc:
        exc.trace = tuple(trace)
        raise
    if epsilon_cert is None:
        epsilon_cert = state.cert_gap if state.t > 0.0 else math.inf
        if certified and epsilon_cert > epsilon:
            certified = False
    return FitResult(
        w_star=state.w,
        iterations=state.k,
        epsilon_cert=epsilon_cert,
        certified=certified,
        trace=tuple(trace),
    )
