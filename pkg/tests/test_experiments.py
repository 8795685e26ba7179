"""Monte-Carlo lower-bound constructions, their closed-form companions,
and the diagnostic excess-risk bounds."""

import math

import numpy as np
import pytest
from scipy.stats import multinomial
from statsmodels.stats.proportion import proportion_confint

from lipreg.exceptions import DataError, InvariantError
from lipreg.experiments import (
    TrialReport,
    agnostic_lb_trial,
    binary_entropy,
    binom_gap_trial,
    finite_class_bound,
    gap_exceedance_exact,
    generalization_bound,
    realizable_lb_trial,
    wilson_interval,
)

CLOSED_FORM_GAP_BITS = math.log2(4.0 / 3.0) / 6.0


# ---------------------------------------------------------------- utilities


def test_binary_entropy_values():
    assert binary_entropy(0.5) == pytest.approx(math.log(2.0), rel=1e-15)
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.005) == pytest.approx(0.03147906594716674, rel=1e-12)
    assert binary_entropy(0.3) == pytest.approx(binary_entropy(0.7), rel=1e-15)
    with pytest.raises(DataError):
        binary_entropy(1.5)


@pytest.mark.parametrize(
    "successes,trials",
    [(0, 10), (1, 10), (5, 10), (10, 10), (17, 100), (60573, 100000)],
)
def test_wilson_interval_matches_statsmodels(successes, trials):
    lo, hi = wilson_interval(successes, trials)
    ref_lo, ref_hi = proportion_confint(successes, trials, alpha=0.05, method="wilson")
    assert lo == pytest.approx(ref_lo, abs=1e-12)
    assert hi == pytest.approx(ref_hi, abs=1e-12)


def test_wilson_interval_contains_estimate_at_extremes():
    lo, hi = wilson_interval(0, 7)
    assert lo <= 0.0 <= hi
    lo, hi = wilson_interval(7, 7)
    assert lo <= 1.0 <= hi


def test_wilson_interval_validation():
    with pytest.raises(DataError):
        wilson_interval(-1, 10)
    with pytest.raises(DataError):
        wilson_interval(11, 10)
    with pytest.raises(DataError):
        wilson_interval(0, 0)


def test_trial_report_invariants():
    with pytest.raises(DataError):
        TrialReport(trials=10, successes=11, estimate=1.1, wilson_low=0.0, wilson_high=1.0)
    with pytest.raises(InvariantError):
        TrialReport(trials=10, successes=5, estimate=0.5, wilson_low=0.6, wilson_high=1.0)


# --------------------------------------------------------------- realizable


def test_realizable_exact_probability():
    rep = realizable_lb_trial(n=100, eps=0.05, rng_seed=0, trials=10)
    assert rep.extras["exact_probability"] == pytest.approx(
        (1.0 - 1.0 / 200.0) ** 100, rel=1e-15
    )
    assert rep.extras["exact_probability"] == pytest.approx(
        0.6057704364907279, rel=1e-14
    )
    assert rep.extras["asymptote"] == pytest.approx(math.exp(-0.5), rel=1e-15)


def test_realizable_witness_chain():
    rep = realizable_lb_trial(n=100, eps=0.05, rng_seed=0, trials=10)
    h = binary_entropy(1.0 / 200.0)
    assert rep.extras["excess_risk_witness"] == pytest.approx(0.1 - h, rel=1e-12)
    assert rep.extras["excess_risk_exact"] >= rep.extras["excess_risk_witness"] >= 0.05


@pytest.mark.parametrize("seed", [0, 7, 42])
def test_realizable_interval_contains_exact(seed):
    rep = realizable_lb_trial(n=100, eps=0.05, rng_seed=seed, trials=20000)
    assert rep.wilson_low <= rep.extras["exact_probability"] <= rep.wilson_high
    assert rep.wilson_low > 0.5


def test_realizable_single_point():
    rep = realizable_lb_trial(n=1, eps=1.0, rng_seed=3, trials=50000)
    assert rep.extras["exact_probability"] == 0.5
    assert rep.wilson_low <= 0.5 <= rep.wilson_high


def test_realizable_preconditions():
    # exp(-4*eps*n) >= 1/2
    with pytest.raises(DataError, match="1/2"):
        realizable_lb_trial(n=1, eps=0.1, rng_seed=0, trials=10)
    # H(1/(2n)) > eps
    with pytest.raises(DataError, match=r"H\(1/\(2n\)\)"):
        realizable_lb_trial(n=100, eps=0.02, rng_seed=0, trials=10)
    with pytest.raises(DataError):
        realizable_lb_trial(n=100, eps=0.05, rng_seed=0, trials=0)
    with pytest.raises(DataError):
        realizable_lb_trial(n=0, eps=0.05, rng_seed=0, trials=10)
    with pytest.raises(DataError):
        realizable_lb_trial(n=100, eps=-0.05, rng_seed=0, trials=10)


def test_realizable_determinism():
    a = realizable_lb_trial(n=100, eps=0.05, rng_seed=11, trials=5000)
    b = realizable_lb_trial(n=100, eps=0.05, rng_seed=11, trials=5000)
    assert a.successes == b.successes
    assert a.params == b.params


# ----------------------------------------------------------------- agnostic


def test_agnostic_closed_form_gap():
    rep = agnostic_lb_trial(n=4, c_bits=3.0, rng_seed=0, trials=10)
    assert rep.extras["closed_form_gap"] == pytest.approx(CLOSED_FORM_GAP_BITS, rel=1e-15)
    assert rep.extras["risk_gap_bits"] == pytest.approx(CLOSED_FORM_GAP_BITS, abs=1e-12)
    assert rep.extras["risk_gap_bits"] == pytest.approx(0.06917291654647396, rel=1e-13)
    assert rep.extras["risk_gap_bits"] > 0.04
    assert rep.extras["risk_gap_nats"] == pytest.approx(0.04794701207529681, rel=1e-13)
    assert rep.extras["risk_gap_nats"] == pytest.approx(
        rep.extras["risk_gap_bits"] * math.log(2.0), rel=1e-15
    )


def test_agnostic_per_positive_loss_is_c():
    rep = agnostic_lb_trial(n=4, c_bits=3.0, rng_seed=0, trials=10)
    assert rep.extras["per_positive_loss_bits"] == 3.0


def test_agnostic_requires_large_c():
    with pytest.raises(DataError, match="sqrt"):
        agnostic_lb_trial(n=36, c_bits=6.0, rng_seed=0, trials=10)
    agnostic_lb_trial(n=36, c_bits=6.1, rng_seed=0, trials=10)


def test_agnostic_reference_run():
    rep = agnostic_lb_trial(n=36, c_bits=360.0, rng_seed=1, trials=20000)
    assert rep.wilson_low >= 0.1
    assert 0.3 <= rep.estimate <= 0.7


def test_agnostic_decomposition_matches_independent_recount():
    # recompute one batch of empirical comparisons from raw multinomial
    # counts with independently rebuilt per-category losses
    n, c_bits, seed, trials = 12, 4.0, 123, 4000
    rep = agnostic_lb_trial(n=n, c_bits=c_bits, rng_seed=seed, trials=trials)

    rng = np.random.Generator(np.random.Philox(seed))
    counts = rng.multinomial(n, [1.0 / 6.0] * 6, size=trials)
    beta = math.log2(1.0 / (1.0 - 2.0 ** -c_bits))
    loss_h1 = np.array([1.0, 1.0, 1.0, 1.0, beta, c_bits])
    loss_h2 = np.array([math.log2(4.0 / 3.0), 2.0, beta, c_bits, 1.0, 1.0])
    wins = int(np.count_nonzero(counts @ loss_h2 < counts @ loss_h1))
    assert rep.successes == wins


def test_agnostic_validation():
    with pytest.raises(DataError):
        agnostic_lb_trial(n=0, c_bits=3.0, rng_seed=0, trials=10)
    with pytest.raises(DataError):
        agnostic_lb_trial(n=4, c_bits=3.0, rng_seed=0, trials=0)


# ---------------------------------------------------------------- binom gap


def test_gap_exact_small_n():
    assert gap_exceedance_exact(1) == 0.0  # X - X' <= 1 < 2
    assert gap_exceedance_exact(36) == pytest.approx(0.00014600504167351576, rel=1e-13)


def test_gap_exact_matches_scipy_multinomial():
    for n in (5, 12, 36):
        thr = 2.0 * math.sqrt(n)
        total = 0.0
        for x in range(n + 1):
            for xp in range(n - x + 1):
                if x - xp > thr:
                    total += multinomial.pmf(
                        [x, xp, n - x - xp], n, [1 / 6, 1 / 6, 2 / 3]
                    )
        assert gap_exceedance_exact(n) == pytest.approx(total, rel=1e-10, abs=1e-18)


def test_gap_exact_custom_threshold():
    # P(X - X' > 0) by symmetry equals (1 - P(X = X')) / 2
    n = 10
    p_eq = sum(
        multinomial.pmf([k, k, n - 2 * k], n, [1 / 6, 1 / 6, 2 / 3])
        for k in range(n // 2 + 1)
    )
    assert gap_exceedance_exact(n, threshold=0.0) == pytest.approx(
        (1.0 - p_eq) / 2.0, rel=1e-10
    )


def test_binom_gap_interval_contains_exact():
    rep = binom_gap_trial(n=36, rng_seed=5, trials=200000)
    exact = rep.extras["exact_probability"]
    assert exact == pytest.approx(0.00014600504167351576, rel=1e-13)
    assert rep.wilson_low <= exact <= rep.wilson_high
    assert rep.estimate > 0.0
    assert rep.extras["threshold"] == 12.0


def test_binom_gap_validation():
    with pytest.raises(DataError):
        binom_gap_trial(n=0, rng_seed=0, trials=10)
    with pytest.raises(DataError):
        gap_exceedance_exact(0)


def test_negative_association_of_cells():
    # joint exceedance never beats the product of marginals on a grid
    n = 24
    for s in (1, 3, 6):
        for t in (1, 3, 6):
            joint = 0.0
            px = 0.0
            py = 0.0
            for x in range(n + 1):
                for xp in range(n - x + 1):
                    pr = multinomial.pmf([x, xp, n - x - xp], n, [1 / 6, 1 / 6, 2 / 3])
                    if x >= s:
                        px += pr
                        if xp >= t:
                            joint += pr
                    if xp >= t:
                        py += pr
            assert joint <= px * py + 1e-12


# ------------------------------------------------------------------- bounds


def test_generalization_bound_hand_value():
    # n=100, L=1, d=1, theta=0.1, delta=0.05
    expect = (1.0 / 0.1) * 5040.0 * 100 ** -0.5 + 3.0 * math.log(10.0) * math.sqrt(
        math.log(40.0) / 200.0
    )
    got = generalization_bound(100, 1.0, 1.0, 0.1, 0.05)
    assert got == pytest.approx(expect, rel=1e-14)


def test_generalization_bound_monotonicity():
    args = dict(lipschitz=2.0, ddim=2.0, theta=0.1, delta=0.05)
    values = [generalization_bound(n, **args) for n in (10, 100, 1000, 10000)]
    assert all(b < a for a, b in zip(values, values[1:]))
    thetas = [generalization_bound(1000, 2.0, 2.0, th, 0.05) for th in (0.2, 0.1, 0.01)]
    assert all(b > a for a, b in zip(thetas, thetas[1:]))
    lips = [generalization_bound(1000, L, 2.0, 0.1, 0.05) for L in (1.0, 2.0, 8.0)]
    assert all(b > a for a, b in zip(lips, lips[1:]))


def test_generalization_bound_validation():
    with pytest.raises(DataError, match="delta"):
        generalization_bound(100, 1.0, 1.0, 0.1, 2.0)
    with pytest.raises(DataError, match="lipschitz"):
        generalization_bound(100, 0.5, 1.0, 0.1, 0.05)
    with pytest.raises(DataError, match="theta"):
        generalization_bound(100, 1.0, 1.0, 0.6, 0.05)
    with pytest.raises(DataError, match="ddim"):
        generalization_bound(100, 1.0, 0.5, 0.1, 0.05)
    with pytest.raises(DataError, match="n"):
        generalization_bound(0, 1.0, 1.0, 0.1, 0.05)


def test_finite_class_bound_hand_value():
    # theta_e=10, n=200, |H|=2, delta=1: 10 * sqrt(log2(4)/400) = 10/sqrt(200)
    assert finite_class_bound(10.0, 200, 2, 1.0) == pytest.approx(
        0.7071067811865475, rel=1e-15
    )


def test_finite_class_bound_decay_and_validation():
    vals = [finite_class_bound(4.0, n, 16, 0.05) for n in (10, 100, 1000)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    with pytest.raises(DataError, match="delta"):
        finite_class_bound(4.0, 100, 16, 1.5)
    with pytest.raises(DataError, match="theta_exponent"):
        finite_class_bound(0.0, 100, 16, 0.5)
    with pytest.raises(DataError, match="class_size"):
        finite_class_bound(4.0, 100, 0, 0.5)
