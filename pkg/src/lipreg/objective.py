"""Empirical and population log loss (KL risk) for probability vectors.

The empirical risk of per-point probabilities w given merged label counts
(c1, c0) is

    R(w) = sum_i [ c1_i * (-ln w_i) + c0_i * (-ln (1 - w_i)) ],

a sum over observations, not an average. It is separable, so the Hessian
is diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Sample
from .exceptions import DataError, DomainError


@dataclass(frozen=True)
class RiskEval:
    value: float
    gradient: np.ndarray
    hessian_diag: np.ndarray


def risk(w, sample: Sample) -> RiskEval:
    """Empirical log risk with gradient and diagonal Hessian.

    Requires 0 < w_i < 1 for every coordinate.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (sample.n,):
        raise DomainError(f"w must have shape ({sample.n},), got {w.shape}")
    if np.any(w <= 0.0) or np.any(w >= 1.0):
        i = int(np.argmin(np.minimum(w, 1.0 - w)))
        raise DomainError(f"w[{i}] = {w[i]:g} outside the open interval (0, 1)")
    c1 = sample.pos_counts
    c0 = sample.neg_counts
    value = float(-(c1 * np.log(w)).sum() - (c0 * np.log1p(-w)).sum())
    gradient = -c1 / w + c0 / (1.0 - w)
    hessian_diag = c1 / w**2 + c0 / (1.0 - w) ** 2
    return RiskEval(value=value, gradient=gradient, hessian_diag=hessian_diag)


def expected_risk(h_values, true_p, point_mass, base: float = math.e) -> float:
    """Population log risk of predictions h against Bernoulli parameters.

    sum_x mass_x * [ p_x * (-log h_x) + (1 - p_x) * (-log (1 - h_x)) ]

    with log taken in the given base (e or 2). A prediction of exactly 0
    or 1 that faces opposing probability mass yields +inf.
    """
    h = np.asarray(h_values, dtype=float)
    p = np.asarray(true_p, dtype=float)
    mass = np.asarray(point_mass, dtype=float)
    if not (h.shape == p.shape == mass.shape):
        raise DataError("h_values, true_p and point_mass must have equal shapes")
    if base not in (math.e, 2.0, 2):
        raise DataError(f"log base must be e or 2, got {base}")
    if np.any(h < 0.0) or np.any(h > 1.0):
        raise DataError("h_values must lie in [0, 1]")
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise DataError("true_p must lie in [0, 1]")
    if np.any(mass < 0.0) or abs(mass.sum() - 1.0) > 1e-12:
        raise DataError("point_mass must be a probability vector")

    ln_base = math.log(base)
    # explicit loop for the 0 * log 0 = 0 convention
    total = 0.0
    for hx, px, mx in zip(h, p, mass):
        if mx == 0.0:
            continue
        for weight, pred in ((px, hx), (1.0 - px, 1.0 - hx)):
            if weight == 0.0:
                continue
            if pred == 0.0:
                return math.inf
            total += mx * weight * (-math.log(pred) / ln_base)
    return total
