"""Independent reference solvers (projected gradient, lattice search) and
the solver-vs-oracle crosscheck harness."""

import math

import numpy as np
import pytest

from lipreg.barrier import Polytope
from lipreg.data import Sample
from lipreg.exceptions import DataError
from lipreg.objective import risk
from lipreg.oracle import crosscheck, grid_solve, oracle_solve, project_polytope


def single_point(pos, neg, theta, lip=1.0):
    s = Sample(distances=np.zeros((1, 1)), pos_counts=[pos], neg_counts=[neg])
    return s, Polytope.from_sample(s, lip, theta)


def pair(labels, bound, theta, lip=1.0):
    d = np.array([[0.0, bound], [bound, 0.0]])
    pos = [1 if y else 0 for y in labels]
    neg = [0 if y else 1 for y in labels]
    s = Sample(distances=d, pos_counts=pos, neg_counts=neg)
    return s, Polytope.from_sample(s, lip, theta)


def random_pair(rng, theta=0.1):
    b = float(rng.uniform(0.05, 0.8))
    labels = (int(rng.integers(0, 2)), int(rng.integers(0, 2)))
    return pair(labels, b, theta)


# --------------------------------------------------------------- projection


def test_projection_identity_inside():
    s, poly = pair((0, 1), bound=0.5, theta=0.1)
    inside = np.array([0.4, 0.6])
    np.testing.assert_allclose(project_polytope(inside, poly), inside, atol=1e-9)


def test_projection_box_clip():
    s, poly = pair((0, 1), bound=5.0, theta=0.1)
    # slab inactive: plain box clipping
    np.testing.assert_allclose(
        project_polytope([2.0, -1.0], poly), [0.9, 0.1], atol=1e-9
    )


def test_projection_slab_split():
    s, poly = pair((0, 1), bound=0.2, theta=0.0)
    # (0.7, 0.3) violates |w0-w1| <= 0.2 by 0.2; split evenly
    np.testing.assert_allclose(
        project_polytope([0.7, 0.3], poly), [0.6, 0.4], atol=1e-8
    )


@pytest.mark.parametrize("trial", range(20))
def test_projection_optimality(trial):
    # the projection must beat every sampled feasible point in distance
    rng = np.random.default_rng(800 + trial)
    s, poly = random_pair(rng)
    x = rng.uniform(-1.0, 2.0, 2)
    p = project_polytope(x, poly)
    # feasible for the closed constraints (boundary contact is fine)
    assert np.all(p >= poly.theta - 1e-8) and np.all(p <= 1 - poly.theta + 1e-8)
    assert abs(p[0] - p[1]) <= poly.lip_bound[0, 1] + 1e-7
    best = np.linalg.norm(x - p)
    for _ in range(200):
        q = rng.uniform(poly.theta, 1.0 - poly.theta, 2)
        if abs(q[0] - q[1]) <= poly.lip_bound[0, 1]:
            assert np.linalg.norm(x - q) >= best - 1e-7


# ------------------------------------------------------------- oracle_solve


def test_oracle_single_positive():
    s, poly = single_point(pos=1, neg=0, theta=0.1)
    np.testing.assert_allclose(oracle_solve(s, poly), [0.9], atol=1e-6)


def test_oracle_opposed_pair_meets_in_middle():
    s, poly = pair((0, 1), bound=0.1, theta=0.05)
    np.testing.assert_allclose(oracle_solve(s, poly), [0.45, 0.55], atol=1e-6)


def test_oracle_two_positives():
    s, poly = pair((1, 1), bound=0.8, theta=0.1)
    np.testing.assert_allclose(oracle_solve(s, poly), [0.9, 0.9], atol=1e-6)


def test_oracle_requires_small_n_and_interior_theta():
    n = 13
    d = np.ones((n, n)) - np.eye(n)
    s = Sample(distances=d, pos_counts=[1] * n, neg_counts=[0] * n)
    poly = Polytope.from_sample(s, 1.0, 0.1)
    with pytest.raises(DataError, match="n <= 12"):
        oracle_solve(s, poly)

    s2, _ = pair((0, 1), bound=0.5, theta=0.1)
    flat = Polytope.from_sample(s2, 1.0, 0.0)
    with pytest.raises(DataError, match="theta"):
        oracle_solve(s2, flat)


@pytest.mark.parametrize("trial", range(25))
def test_oracle_feasible_and_beats_random_feasible_points(trial):
    rng = np.random.default_rng(300 + trial)
    s, poly = random_pair(rng)
    w = oracle_solve(s, poly, tol=1e-7)
    assert poly.first_violation(w * (1 - 1e-12) + 0.5e-12) is None
    val = risk(np.clip(w, poly.theta + 1e-12, 1 - poly.theta - 1e-12), s).value
    b = poly.lip_bound[0, 1]
    for _ in range(400):
        q = rng.uniform(poly.theta + 1e-9, 1.0 - poly.theta - 1e-9, 2)
        if abs(q[0] - q[1]) <= b:
            assert risk(q, s).value >= val - 1e-6


# --------------------------------------------------------------- grid_solve


def test_grid_single_negative():
    s, poly = single_point(pos=0, neg=1, theta=0.2)
    np.testing.assert_allclose(grid_solve(s, poly, resolution=1e-4), [0.2], atol=1e-9)


def test_grid_symmetric_pair_within_resolution():
    s, poly = pair((0, 1), bound=0.1, theta=0.05)
    w = grid_solve(s, poly, resolution=1e-3)
    assert abs(abs(w[1] - w[0]) - 0.1) <= 1e-3 + 1e-9


def test_grid_three_points():
    d = np.array([[0.0, 0.3, 0.6], [0.3, 0.0, 0.3], [0.6, 0.3, 0.0]])
    s = Sample(distances=d, pos_counts=[1, 1, 1], neg_counts=[0, 0, 0])
    poly = Polytope.from_sample(s, 1.0, 0.1)
    w = grid_solve(s, poly, resolution=1e-2)
    np.testing.assert_allclose(w, [0.9, 0.9, 0.9], atol=1e-9)


def test_grid_rejects_large_n():
    d = np.ones((4, 4)) - np.eye(4)
    s = Sample(distances=d, pos_counts=[1] * 4, neg_counts=[0] * 4)
    poly = Polytope.from_sample(s, 1.0, 0.1)
    with pytest.raises(DataError, match="n <= 3"):
        grid_solve(s, poly)


@pytest.mark.parametrize("trial", range(25))
def test_oracle_agrees_with_grid(trial):
    rng = np.random.default_rng(1300 + trial)
    s, poly = random_pair(rng)
    res = 1e-3
    w_pg = oracle_solve(s, poly, tol=1e-7)
    w_gr = grid_solve(s, poly, resolution=res)
    gap = risk(w_gr, s).value - risk(np.clip(w_pg, poly.theta, 1 - poly.theta), s).value
    # lattice risk can only exceed the true optimum by O(resolution)
    assert -1e-6 <= gap <= 10.0 * res


# --------------------------------------------------------------- crosscheck


def test_crosscheck_small_run_passes():
    report = crosscheck(seed=9, instances=8, epsilon=1e-4, oracle_tol=1e-5)
    assert report.passed
    assert report.max_gap <= report.threshold
    assert report.lambda_violations == 0
    assert report.cert_violations == 0
    assert len(report.results) == 8
    assert all(r.certified for r in report.results)
    assert all(r.risk_gap <= r.certificate + 1e-8 for r in report.results)


def test_crosscheck_validation():
    with pytest.raises(DataError):
        crosscheck(instances=0)
