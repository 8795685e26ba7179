"""Reference solvers and the solver-vs-reference audit.

Everything here avoids the interior-point code paths on purpose: the
projection is Dykstra's alternating scheme over the box and the pairwise
slabs, the solver is projected gradient descent (spectral step lengths
with a nonmonotone safeguard), and grid_solve is brute force. They are
slow and only meant for small instances and audits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .barrier import Polytope, barrier_parameter
from .data import Sample
from .exceptions import DataError, OracleError
from .objective import risk
from .solver import FitResult, PathConstants, fit

ORACLE_MAX_POINTS = 12
GRID_MAX_POINTS = 3
PROJECTION_TOL = 1e-10


def project_polytope(x, poly: Polytope, tol: float = PROJECTION_TOL, max_cycles: int = 100000):
    """Euclidean projection onto the polytope via Dykstra's alternating
    projections (box first, then each pairwise slab).

    Stops when both the iterate and every correction vector move at most
    tol over a full cycle. Iterate movement alone is not a safe criterion:
    far from the polytope the iterate parks early while the corrections
    still carry the unfinished work.
    """
    n = poly.n
    lo = poly.theta
    hi = 1.0 - poly.theta
    bound = poly.lip_bound
    pairs = [(i, j, float(bound[i, j])) for i in range(n) for j in range(i + 1, n)]
    cur = [float(v) for v in np.asarray(x, dtype=float)]
    if len(cur) != n:
        raise DataError(f"point must have length {n}, got {len(cur)}")
    box_corr = [0.0] * n
    slab_corr = [0.0] * len(pairs)

    for _ in range(max_cycles):
        start = cur[:]
        drift = 0.0
        for i in range(n):
            y = cur[i] + box_corr[i]
            z = lo if y < lo else (hi if y > hi else y)
            c = y - z
            d = c - box_corr[i]
            drift += d * d
            box_corr[i] = c
            cur[i] = z
        for k, (i, j, b) in enumerate(pairs):
            d = slab_corr[k]
            yi = cur[i] + d
            yj = cur[j] - d
            e = yi - yj
            if e > b:
                delta = (e - b) * 0.5
            elif e < -b:
                delta = (e + b) * 0.5
            else:
                delta = 0.0
            dd = delta - d
            drift += 2.0 * dd * dd
            slab_corr[k] = delta
            cur[i] = yi - delta
            cur[j] = yj + delta
        moved = max(abs(a - b2) for a, b2 in zip(cur, start))
        if moved <= tol and math.sqrt(drift) <= tol:
            out = np.array(cur)
            np.clip(out, lo, hi, out=out)
            return out
    raise OracleError(f"projection did not converge within {max_cycles} cycles")


def oracle_solve(sample: Sample, poly: Polytope, tol: float = 1e-6, max_iter: int = 200000):
    """Constrained risk minimizer by projected gradient descent.

    Spectral (Barzilai-Borwein) step lengths with a 10-step nonmonotone
    backtracking safeguard; runs until the fixed-step gradient mapping
    has norm at most tol / 10. Only for n <= 12.
    """
    if sample.n > ORACLE_MAX_POINTS:
        raise DataError(f"oracle_solve supports n <= {ORACLE_MAX_POINTS}, got {sample.n}")
    if sample.n != poly.n:
        raise DataError(f"sample has {sample.n} points but polytope has {poly.n}")
    if poly.theta <= 0.0:
        raise DataError("oracle_solve requires theta > 0")
    if tol <= 0.0:
        raise DataError(f"tol must be positive, got {tol}")

    target = tol / 10.0
    smoothness = float((sample.weights / poly.theta**2).max())
    eta_ref = 1.0 / smoothness
    eta_max = 100.0 * eta_ref

    x = np.full(sample.n, 0.5)
    ev = risk(x, sample)
    recent = [ev.value]
    eta = eta_ref

    for _ in range(max_iter):
        candidate = project_polytope(x - eta * ev.gradient, poly)
        step = candidate - x
        step_norm = float(np.linalg.norm(step))

        if step_norm / eta <= target:
            # confirm with the fixed reference step before accepting
            if eta == eta_ref:
                return x
            ref = project_polytope(x - eta_ref * ev.gradient, poly)
            if float(np.linalg.norm(x - ref)) / eta_ref <= target:
                return x

        slope = float(ev.gradient @ step)
        bar = max(recent) + 1e-4 * slope
        alpha = 1.0
        x_new = candidate
        ev_new = risk(x_new, sample)
        while ev_new.value > bar + abs(bar) * 1e-15 and alpha > 1e-12:
            alpha *= 0.5
            bar = max(recent) + 1e-4 * alpha * slope
            x_new = x + alpha * step
            ev_new = risk(x_new, sample)

        grad_diff = ev_new.gradient - ev.gradient
        s = x_new - x
        sy = float(s @ grad_diff)
        if sy > 0.0:
            eta = min(max(float(s @ s) / sy, eta_ref), eta_max)
        else:
            eta = eta_max
        x = x_new
        ev = ev_new
        recent.append(ev.value)
        if len(recent) > 10:
            recent.pop(0)
    raise OracleError(f"projected gradient did not reach stationarity {target!r} "
                      f"within {max_iter} iterations")


def grid_solve(sample: Sample, poly: Polytope, resolution: float = 1e-3):
    """Exhaustive lattice minimizer over [theta, 1-theta]^n, n <= 3."""
    n = sample.n
    if n > GRID_MAX_POINTS:
        raise DataError(f"grid_solve supports n <= {GRID_MAX_POINTS}, got {n}")
    if n != poly.n:
        raise DataError(f"sample has {n} points but polytope has {poly.n}")
    if resolution <= 0.0:
        raise DataError(f"resolution must be positive, got {resolution}")
    theta = poly.theta
    count = int(round((1.0 - 2.0 * theta) / resolution)) + 1
    grid = theta + resolution * np.arange(count)
    grid = grid[grid < 1.0]
    if theta <= 0.0:
        grid = grid[grid > 0.0]
    c1 = sample.pos_counts
    c0 = sample.neg_counts

    def point_risk(values, i):
        return -c1[i] * np.log(values) - c0[i] * np.log1p(-values)

    if n == 1:
        risks = point_risk(grid, 0)
        return np.array([grid[int(np.argmin(risks))]])

    slack = 1e-12
    if n == 2:
        b = poly.lip_bound[0, 1]
        r0 = point_risk(grid, 0)
        r1 = point_risk(grid, 1)
        best = (math.inf, None)
        for i0, w0 in enumerate(grid):
            feas = np.abs(w0 - grid) <= b + slack
            if not feas.any():
                continue
            total = r0[i0] + np.where(feas, r1, np.inf)
            j = int(np.argmin(total))
            if total[j] < best[0]:
                best = (float(total[j]), np.array([w0, grid[j]]))
        return best[1]

    b01 = poly.lip_bound[0, 1]
    b02 = poly.lip_bound[0, 2]
    b12 = poly.lip_bound[1, 2]
    r0 = point_risk(grid, 0)
    r1 = point_risk(grid, 1)
    r2 = point_risk(grid, 2)
    w1m, w2m = np.meshgrid(grid, grid, indexing="ij")
    plane = r1[:, None] + r2[None, :]
    plane = np.where(np.abs(w1m - w2m) <= b12 + slack, plane, np.inf)
    best = (math.inf, None)
    for i0, w0 in enumerate(grid):
        mask = (np.abs(w0 - w1m) <= b01 + slack) & (np.abs(w0 - w2m) <= b02 + slack)
        total = r0[i0] + np.where(mask, plane, np.inf)
        flat = int(np.argmin(total))
        val = float(total.flat[flat])
        if val < best[0]:
            i1, i2 = np.unravel_index(flat, total.shape)
            best = (val, np.array([w0, grid[i1], grid[i2]]))
    if best[1] is None:
        raise OracleError("no feasible lattice point at this resolution")
    return best[1]


@dataclass(frozen=True)
class InstanceResult:
    n: int
    lipschitz: float
    theta: float
    iterations: int
    certificate: float
    certified: bool
    risk_gap: float
    lambda_ok: bool
    cert_sound: bool


@dataclass(frozen=True)
class CrosscheckReport:
    seed: int
    epsilon: float
    oracle_tol: float
    threshold: float
    results: tuple
    max_gap: float
    lambda_violations: int
    cert_violations: int
    passed: bool


def random_instance(rng, n_min=2, n_max=10, theta_choices=(0.05, 0.1, 0.2),
                    lip_range=(0.5, 5.0)):
    """Seeded random instance: symmetrized diameter-normalized metric,
    random labels, random Lipschitz constant, random truncation."""
    n = int(rng.integers(n_min, n_max + 1))
    m = rng.uniform(0.05, 1.0, (n, n))
    m = np.triu(m, 1)
    m = m + m.T
    m /= m.max()
    labels = rng.integers(0, 2, n)
    sample = Sample(m, labels, 1 - labels)
    lip = float(rng.uniform(*lip_range))
    theta = float(rng.choice(theta_choices))
    return sample, Polytope.from_sample(sample, lip, theta)


def crosscheck(seed: int = 0, instances: int = 50, epsilon: float = 1e-4,
               oracle_tol: float = 1e-5, n_min: int = 2, n_max: int = 10,
               constants: PathConstants = PathConstants()) -> CrosscheckReport:
    """Fit seeded random instances and compare against oracle_solve.

    For each instance, records the risk gap fit-minus-oracle, whether the
    dual-norm contract held at every iteration, and whether the true gap
    respects the certificate. Passes when every gap is at most
    epsilon + oracle_tol and no contract or certificate violations occur.
    """
    if instances < 1:
        raise DataError(f"instances must be >= 1, got {instances}")
    rng = np.random.Generator(np.random.Philox(seed))
    results = []
    for _ in range(instances):
        sample, poly = random_instance(rng, n_min=n_min, n_max=n_max)
        fitted: FitResult = fit(sample, poly, epsilon, constants=constants)
        reference = oracle_solve(sample, poly, tol=oracle_tol)
        gap = risk(fitted.w_star, sample).value - risk(reference, sample).value
        lambda_ok = all(
            rec.lam_after_increase <= constants.tau and rec.lam_after_step <= constants.beta
            for rec in fitted.trace
        )
        results.append(
            InstanceResult(
                n=sample.n,
                lipschitz=poly.lipschitz_L,
                theta=poly.theta,
                iterations=fitted.iterations,
                certificate=fitted.epsilon_cert,
                certified=fitted.certified,
                risk_gap=gap,
                lambda_ok=lambda_ok,
                cert_sound=gap <= fitted.epsilon_cert + 1e-8,
            )
        )
    threshold = epsilon + oracle_tol
    max_gap = max(r.risk_gap for r in results)
    lambda_violations = sum(not r.lambda_ok for r in results)
    cert_violations = sum(not r.cert_sound for r in results)
    passed = (
        max_gap <= threshold
        and lambda_violations == 0
        and cert_violations == 0
        and all(r.certified for r in results)
    )
    return CrosscheckReport(
        seed=seed,
        epsilon=epsilon,
        oracle_tol=oracle_tol,
        threshold=threshold,
        results=tuple(results),
        max_gap=max_gap,
        lambda_violations=lambda_violations,
        cert_violations=cert_violations,
        passed=passed,
    )
