"""Log barrier for the truncated Lipschitz polytope.

The feasible set is

    theta <= w_i <= 1 - theta,            (box)
    |w_i - w_j| <= B_ij  for i != j,      (pairwise slabs, B = L * dist)

and the barrier is F = F_box + F_slab with

    F_box(w)  = -sum_i [ ln(w_i - theta) + ln(1 - theta - w_i) ]
    F_slab(w) = -sum_{i<j} [ ln zeta(j,i) + ln zeta(i,j) ],
    zeta(i,j) = w_i - w_j + B_ij.

Each log term contributes 1 to the barrier parameter, so the full count is
n(n-1) + 2n; the slab-only count n(n-1) is available via a flag.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Sample
from .exceptions import DataError, DomainError, InvariantError


@dataclass(frozen=True)
class Polytope:
    """Slab bounds B (n x n), truncation theta in [0, 1/2), and the
    Lipschitz constant the bounds were built from."""

    lip_bound: np.ndarray
    theta: float
    lipschitz_L: float

    def __post_init__(self):
        b = np.ascontiguousarray(np.asarray(self.lip_bound, dtype=float))
        n = b.shape[0]
        if b.shape != (n, n):
            raise DataError(f"lip_bound must be square, got {b.shape}")
        if np.any(b != b.T):
            raise DataError("lip_bound must be symmetric")
        if np.any(np.diag(b) != 0.0):
            raise DataError("lip_bound diagonal must be zero")
        off = b[~np.eye(n, dtype=bool)]
        if off.size and off.min() <= 0.0:
            raise DataError("lip_bound off-diagonal entries must be positive")
        if not 0.0 <= self.theta < 0.5:
            raise DataError(f"theta must lie in [0, 0.5), got {self.theta}")
        if self.lipschitz_L <= 0.0:
            raise DataError(f"lipschitz_L must be positive, got {self.lipschitz_L}")
        b.setflags(write=False)
        object.__setattr__(self, "lip_bound", b)

    @classmethod
    def from_sample(cls, sample: Sample, lipschitz: float, theta: float) -> "Polytope":
        if lipschitz <= 0.0:
            raise DataError(f"lipschitz constant must be positive, got {lipschitz}")
        return cls(lip_bound=lipschitz * sample.distances, theta=theta, lipschitz_L=lipschitz)

    @property
    def n(self) -> int:
        return self.lip_bound.shape[0]

    def first_violation(self, w) -> str | None:
        """Name of the first constraint at or past its boundary, else None."""
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n,):
            return f"w must have shape ({self.n},), got {w.shape}"
        lo = w - self.theta
        hi = (1.0 - self.theta) - w
        if np.any(lo <= 0.0):
            i = int(np.argmin(lo))
            return f"box lower bound at i={i}: w={w[i]:g} <= theta={self.theta:g}"
        if np.any(hi <= 0.0):
            i = int(np.argmin(hi))
            return f"box upper bound at i={i}: w={w[i]:g} >= 1-theta={1.0 - self.theta:g}"
        zeta = w[:, None] - w[None, :] + self.lip_bound
        np.fill_diagonal(zeta, np.inf)
        if np.any(zeta <= 0.0):
            i, j = (int(v) for v in np.unravel_index(np.argmin(zeta), zeta.shape))
            return (
                f"slab at (i={i}, j={j}): w_i - w_j = {w[i] - w[j]:g} "
                f"<= -B_ij = {-self.lip_bound[i, j]:g}"
            )
        return None


@dataclass(frozen=True)
class BarrierEval:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def barrier_eval(w, p: Polytope) -> BarrierEval:
    """Barrier value, gradient and full Hessian at a strictly feasible w.

    Gradient and Hessian are assembled from the reciprocal slack matrix
    R_ij = 1 / zeta(i,j):

        grad_i = colsum_i(R) - rowsum_i(R) + box terms
        hess   = diag(rowsum + colsum of R*R) - (R*R + (R*R)^T) + box diag
    """
    violation = p.first_violation(w)
    if violation is not None:
        raise DomainError(f"point not strictly feasible: {violation}")
    w = np.asarray(w, dtype=float)
    n = p.n

    lo = w - p.theta
    hi = (1.0 - p.theta) - w
    value = float(-np.log(lo).sum() - np.log(hi).sum())
    grad = -1.0 / lo + 1.0 / hi
    hess_diag = 1.0 / lo**2 + 1.0 / hi**2

    zeta = w[:, None] - w[None, :] + p.lip_bound
    np.fill_diagonal(zeta, 1.0)  # excluded from every sum below
    value += float(-np.log(zeta).sum())
    recip = 1.0 / zeta
    np.fill_diagonal(recip, 0.0)
    grad += recip.sum(axis=0) - recip.sum(axis=1)
    sq = recip * recip
    hess = -(sq + sq.T)
    hess_diag += sq.sum(axis=0) + sq.sum(axis=1)
    hess[np.arange(n), np.arange(n)] = hess_diag
    return BarrierEval(value=value, gradient=grad, hessian=hess)


def barrier_parameter(p: Polytope, include_box: bool = True) -> float:
    """Number of log terms: n(n-1) + 2n, or n(n-1) when include_box=False."""
    n = p.n
    nu = float(n * (n - 1))
    if include_box:
        nu += 2.0 * n
    return nu


def analytic_center(p: Polytope) -> np.ndarray:
    """Barrier minimizer: the all-halves vector, by symmetry of box and slabs."""
    w = np.full(p.n, 0.5)
    grad = barrier_eval(w, p).gradient
    if float(np.abs(grad).max()) > 1e-10:
        raise InvariantError(
            f"barrier gradient at the all-halves point is {np.abs(grad).max():g}, expected 0"
        )
    return w
