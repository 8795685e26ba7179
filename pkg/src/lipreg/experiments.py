"""Monte-Carlo constructions showing why truncation is necessary, plus
closed-form generalization-bound diagnostics.

Three seeded simulations:

  * realizable: a single point with P(Y=1) = 1/(2n). When all n draws come
    up 0 (probability (1-1/(2n))^n > 1/2), unconstrained risk minimization
    drives the estimate to an arbitrarily small value whose excess risk
    exceeds any target eps.
  * agnostic: a two-hypothesis class over {1,2,3} x {0,1} uniform, where
    the hypothesis that is worse by a constant (1/6)*log2(4/3) in
    expectation nevertheless wins the empirical comparison with constant
    probability once its predictions are allowed to reach 2^-C, C > sqrt(n).
  * binom-gap: the anti-concentration event X - X' > 2*sqrt(n) for two
    cell counts of a uniform 6-way multinomial, with an exact trinomial
    evaluator for cross-checking.

Every estimate carries a 95% Wilson interval and the seed that produced it.
All randomness comes from a counter-based generator (Philox) so reports are
bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .exceptions import DataError, InvariantError
from .objective import expected_risk

Z95 = 1.959963984540054
GEN_BOUND_CONSTANT = 5040.0  # covering-argument constant 2520, doubled


def binary_entropy(p: float) -> float:
    """Entropy of a Bernoulli(p) in nats; H(0) = H(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise DataError(f"p must lie in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log1p(-p)


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """95% score interval for a binomial proportion."""
    if trials < 1:
        raise DataError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise DataError(f"successes must lie in [0, {trials}], got {successes}")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4 * trials * trials))
    # the score interval always contains phat; enforce it under roundoff
    lo = min(max(0.0, center - half), phat)
    hi = max(min(1.0, center + half), phat)
    return lo, hi


@dataclass(frozen=True)
class TrialReport:
    """Outcome of a seeded Monte-Carlo run.

    params holds the construction's inputs (n, eps, C, seed, ...); extras
    holds closed-form companions (exact probabilities, risk gaps) for the
    interval to be checked against.
    """

    trials: int
    successes: int
    estimate: float
    wilson_low: float
    wilson_high: float
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise DataError(
                f"successes = {self.successes} outside [0, {self.trials}]"
            )
        if not self.wilson_low <= self.estimate <= self.wilson_high:
            raise InvariantError(
                f"estimate {self.estimate!r} outside its interval "
                f"[{self.wilson_low!r}, {self.wilson_high!r}]"
            )


def _report(successes: int, trials: int, params: dict, extras: dict) -> TrialReport:
    lo, hi = wilson_interval(successes, trials)
    return TrialReport(
        trials=trials,
        successes=successes,
        estimate=successes / trials,
        wilson_low=lo,
        wilson_high=hi,
        params=params,
        extras=extras,
    )


def realizable_lb_trial(n: int, eps: float, rng_seed: int, trials: int) -> TrialReport:
    """Estimate the probability that a size-n sample from Bernoulli(1/(2n))
    contains no positive label.

    In that event any unconstrained risk minimizer may predict a value as
    small as e^(-4*eps*n), incurring excess risk at least
    2*eps - H(1/(2n)) >= eps. Preconditions: e^(-4*eps*n) < 1/2 and
    H(1/(2n)) <= eps, so the witness chain is valid.
    """
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    if trials < 1:
        raise DataError(f"trials must be >= 1, got {trials}")
    if eps <= 0.0:
        raise DataError(f"eps must be positive, got {eps}")
    p = 1.0 / (2 * n)
    if math.exp(-4.0 * eps * n) >= 0.5:
        raise DataError(
            f"n = {n} too small for eps = {eps}: exp(-4*eps*n) = "
            f"{math.exp(-4.0 * eps * n)!r} >= 1/2"
        )
    entropy = binary_entropy(p)
    if entropy > eps:
        raise DataError(
            f"n = {n} too small for eps = {eps}: H(1/(2n)) = {entropy!r} > eps"
        )
    rng = np.random.Generator(np.random.Philox(rng_seed))
    draws = rng.binomial(n, p, size=trials)
    successes = int(np.count_nonzero(draws == 0))

    # excess risk of predicting q = e^(-4*eps*n) against truth p, minus the
    # Bayes risk H(p); lower-bounded by 2*eps - H(p) since the (1-p) term
    # of the cross entropy is nonnegative
    q = math.exp(-4.0 * eps * n)
    cross_entropy = p * (4.0 * eps * n) + (1.0 - p) * (-math.log1p(-q))
    excess_exact = cross_entropy - entropy
    witness = 2.0 * eps - entropy
    if not excess_exact >= witness >= eps:
        raise InvariantError(
            f"excess-risk chain broken: exact {excess_exact!r}, "
            f"witness {witness!r}, eps {eps!r}"
        )
    return _report(
        successes,
        trials,
        params={"construction": "realizable", "n": n, "eps": eps, "seed": rng_seed},
        extras={
            "exact_probability": (1.0 - p) ** n,
            "asymptote": math.exp(-0.5),
            "excess_risk_exact": excess_exact,
            "excess_risk_witness": witness,
        },
    )


def _agnostic_tables(c_bits: float):
    """Per-category base-2 losses for the two hypotheses.

    Categories are (x, y) pairs in the column order
    (1,0), (1,1), (2,0), (2,1), (3,0), (3,1).

    h1 = (1/2, 1/2, 2^-C), h2 = (1/4, 2^-C, 1/2).
    """
    beta = -math.log1p(-(2.0 ** -c_bits)) / math.log(2.0)  # log2(1/(1-2^-C))
    log2_4_3 = math.log2(4.0 / 3.0)
    loss_h1 = np.array([1.0, 1.0, 1.0, 1.0, beta, c_bits])
    loss_h2 = np.array([log2_4_3, 2.0, beta, c_bits, 1.0, 1.0])
    return loss_h1, loss_h2, beta, log2_4_3


def agnostic_lb_trial(n: int, c_bits: float, rng_seed: int, trials: int) -> TrialReport:
    """Estimate the probability that the worse hypothesis wins the
    empirical comparison, P(R_n(h2) < R_n(h1)), under the uniform
    distribution on {1,2,3} x {0,1} with base-2 losses.

    Requires C > sqrt(n). Each trial's empirical risks are computed twice,
    by the grouped-count decomposition and by a per-category loss table,
    and the two must agree to 1e-9.
    """
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    if trials < 1:
        raise DataError(f"trials must be >= 1, got {trials}")
    if not c_bits > math.sqrt(n):
        raise DataError(
            f"C must exceed sqrt(n) = {math.sqrt(n)!r}, got C = {c_bits}"
        )
    rng = np.random.Generator(np.random.Philox(rng_seed))
    counts = rng.multinomial(n, [1.0 / 6.0] * 6, size=trials)
    n10, n11, n20, n21, n30, n31 = (counts[:, k].astype(float) for k in range(6))

    loss_h1, loss_h2, beta, log2_4_3 = _agnostic_tables(c_bits)
    # grouped decomposition: n*R_n(h) = Rhat^1 + Rhat^2 + Rhat^3
    total_h1 = (n10 + n11) + (n20 + n21) + (n30 * beta + n31 * c_bits)
    total_h2 = (n10 * log2_4_3 + 2.0 * n11) + (n20 * beta + n21 * c_bits) + (n30 + n31)
    table_h1 = counts @ loss_h1
    table_h2 = counts @ loss_h2
    err = max(
        float(np.abs(total_h1 - table_h1).max()),
        float(np.abs(total_h2 - table_h2).max()),
    )
    if err > 1e-9:
        raise InvariantError(
            f"empirical-risk decomposition disagrees with the loss table "
            f"by {err!r}"
        )
    successes = int(np.count_nonzero(total_h2 < total_h1))

    mass = [1.0 / 3.0] * 3
    truth = [0.5] * 3
    small = 2.0 ** -c_bits
    risk_h1 = expected_risk([0.5, 0.5, small], truth, mass, base=2)
    risk_h2 = expected_risk([0.25, small, 0.5], truth, mass, base=2)
    return _report(
        successes,
        trials,
        params={"construction": "agnostic", "n": n, "C": c_bits, "seed": rng_seed},
        extras={
            "risk_gap_bits": risk_h2 - risk_h1,
            "risk_gap_nats": (risk_h2 - risk_h1) * math.log(2.0),
            "closed_form_gap": log2_4_3 / 6.0,
            "per_positive_loss_bits": c_bits,
        },
    )


def binom_gap_trial(n: int, rng_seed: int, trials: int) -> TrialReport:
    """Estimate P(X - X' > 2*sqrt(n)) for the first two cell counts of a
    uniform 6-way multinomial of size n."""
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    if trials < 1:
        raise DataError(f"trials must be >= 1, got {trials}")
    rng = np.random.Generator(np.random.Philox(rng_seed))
    counts = rng.multinomial(n, [1.0 / 6.0] * 6, size=trials)
    threshold = 2.0 * math.sqrt(n)
    successes = int(np.count_nonzero(counts[:, 0] - counts[:, 1] > threshold))
    return _report(
        successes,
        trials,
        params={"construction": "binom-gap", "n": n, "seed": rng_seed},
        extras={
            "threshold": threshold,
            "exact_probability": gap_exceedance_exact(n),
        },
    )


def gap_exceedance_exact(n: int, threshold: float | None = None) -> float:
    """Exact P(X - X' > threshold) for (X, X') the first two cells of a
    uniform 6-way multinomial of size n, by trinomial summation.

    Defaults to the 2*sqrt(n) threshold of the anti-concentration event.
    """
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    if threshold is None:
        threshold = 2.0 * math.sqrt(n)
    log_p = math.log(1.0 / 6.0)
    log_rest = math.log(2.0 / 3.0)
    log_n_fact = gammaln(n + 1)
    total = 0.0
    for x in range(n + 1):
        for xp in range(0, n - x + 1):
            if not x - xp > threshold:
                # x - xp only shrinks as xp grows
                break
            rest = n - x - xp
            log_term = (
                log_n_fact
                - gammaln(x + 1)
                - gammaln(xp + 1)
                - gammaln(rest + 1)
                + (x + xp) * log_p
                + rest * log_rest
            )
            total += math.exp(log_term)
    return total


def generalization_bound(
    n: int, lipschitz: float, ddim: float, theta: float, delta: float
) -> float:
    """Diagnostic excess-risk bound for truncated Lipschitz regression:

        (1/theta) * 5040 * L^(d/(d+1)) * n^(-1/(d+1))
        + 3 * ln(1/theta) * sqrt(ln(2/delta) / (2n))

    The leading constant comes from a covering argument and is loose by
    design; useful for rate comparisons, not absolute calibration.
    """
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    if lipschitz < 1.0:
        raise DataError(f"lipschitz must be >= 1 for the bound, got {lipschitz}")
    if ddim < 1.0:
        raise DataError(f"ddim must be >= 1, got {ddim}")
    if not 0.0 < theta < 0.5:
        raise DataError(f"theta must lie in (0, 0.5), got {theta}")
    if not 0.0 < delta < 1.0:
        raise DataError(f"delta must lie in (0, 1), got {delta}")
    rate = lipschitz ** (ddim / (ddim + 1.0)) * n ** (-1.0 / (ddim + 1.0))
    first = GEN_BOUND_CONSTANT / theta * rate
    second = 3.0 * math.log(1.0 / theta) * math.sqrt(math.log(2.0 / delta) / (2.0 * n))
    return first + second


def finite_class_bound(
    theta_exponent: float, n: int, class_size: int, delta: float
) -> float:
    """Hoeffding bound for a finite class of 2^-theta-truncated hypotheses
    under base-2 losses: theta * sqrt(log2(2*|H|/delta) / (2n)).

    delta = 1 is admitted (vacuous confidence, finite bound).
    """
    if theta_exponent <= 0.0:
        raise DataError(f"theta_exponent must be positive, got {theta_exponent}")
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    if class_size < 1:
        raise DataError(f"class_size must be >= 1, got {class_size}")
    if not 0.0 < delta <= 1.0:
        raise DataError(f"delta must lie in (0, 1], got {delta}")
    return theta_exponent * math.sqrt(math.log2(2.0 * class_size / delta) / (2.0 * n))
