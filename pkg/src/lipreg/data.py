"""Sample ingestion and validation.

Input is CSV with a header row, in one of two modes:

* coordinate mode: columns ``x1,...,xk,label``; pairwise distances are
  computed under a p-norm,
* matrix mode: columns ``d1,...,dn,label``; the n rows give the distance
  matrix directly.

Distances are normalized to diameter <= 1 by default (the divisor is kept
so that queries can be mapped into the same scale), and points at distance
exactly 0 are merged into a single point carrying per-label counts.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .exceptions import DataError

THETA_CAP = 0.49


def _as_stream(source):
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def _read_rows(source):
    reader = csv.reader(_as_stream(source))
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DataError("empty input: a header row is required")
    return rows[0], rows[1:]


def _parse_float(cell, row, col):
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"data row {row}, column {col}: not a number: {cell!r}") from None


def _parse_label(cell, row):
    value = _parse_float(cell, row, "label")
    if value == 0.0:
        return 0
    if value == 1.0:
        return 1
    raise DataError(f"data row {row}: label outside {{0,1}}: {cell!r}")


def _parse_table(header, data_rows, with_label):
    """Parse rows into a float matrix plus labels; row indices are 1-based."""
    width = len(header)
    if with_label:
        if header[-1].strip().lower() != "label":
            raise DataError("last header column must be 'label'")
        if width < 2:
            raise DataError("need at least one value column before 'label'")
    values = np.empty((len(data_rows), width - 1 if with_label else width))
    labels = np.empty(len(data_rows), dtype=np.int64) if with_label else None
    for i, row in enumerate(data_rows, start=1):
        if len(row) != width:
            raise DataError(f"data row {i}: expected {width} columns, found {len(row)}")
        for j, cell in enumerate(row[:-1] if with_label else row):
            values[i - 1, j] = _parse_float(cell, i, header[j].strip() or str(j))
        if with_label:
            labels[i - 1] = _parse_label(row[-1], i)
    return values, labels


def pairwise_distances(coords, norm_p=2.0):
    """All pairwise p-norm distances between the rows of ``coords``."""
    coords = np.asarray(coords, dtype=float)
    diff = np.abs(coords[:, None, :] - coords[None, :, :])
    if np.isinf(norm_p):
        return diff.max(axis=2)
    return (diff ** norm_p).sum(axis=2) ** (1.0 / norm_p)


def _validate_square(dist):
    n = dist.shape[0]
    if dist.shape != (n, n):
        raise DataError(f"distance matrix must be square, got {dist.shape}")
    for i in range(n):
        if dist[i, i] != 0.0:
            raise DataError(f"distance matrix diagonal entry ({i},{i}) is {dist[i, i]:g}, must be 0")
    bad = np.argwhere(dist != dist.T)
    if bad.size:
        i, j = (int(v) for v in bad[0])
        raise DataError(
            f"distance matrix not symmetric at ({i},{j}): {dist[i, j]:g} != {dist[j, i]:g}"
        )
    neg = np.argwhere(dist < 0)
    if neg.size:
        i, j = (int(v) for v in neg[0])
        raise DataError(f"negative distance at ({i},{j}): {dist[i, j]:g}")


def _merge_duplicates(dist, labels):
    """Collapse points at distance exactly 0; returns (dist, pos, neg, keep)."""
    n = dist.shape[0]
    owner = list(range(n))

    def find(i):
        while owner[i] != i:
            owner[i] = owner[owner[i]]
            i = owner[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if dist[i, j] == 0.0:
                owner[find(j)] = find(i)

    roots = []
    index = {}
    for i in range(n):
        r = find(i)
        if r not in index:
            index[r] = len(roots)
            roots.append(r)

    m = len(roots)
    pos = np.zeros(m, dtype=np.int64)
    neg = np.zeros(m, dtype=np.int64)
    for i in range(n):
        g = index[find(i)]
        if labels[i]:
            pos[g] += 1
        else:
            neg[g] += 1

    merged = dist[np.ix_(roots, roots)]
    # merging is only well defined when duplicate rows agree on all distances
    for i in range(n):
        r = index[find(i)]
        row = dist[i, roots]
        if np.any(np.abs(row - merged[r]) > 1e-12):
            j = roots[int(np.argmax(np.abs(row - merged[r])))]
            raise DataError(
                f"rows {roots[index[find(i)]]} and {i} are at distance 0 "
                f"but disagree on the distance to point {j}"
            )
    return merged, pos, neg, np.array(roots, dtype=np.int64)


@dataclass(frozen=True)
class Sample:
    """Merged, validated sample.

    distances   (n, n) symmetric, zero diagonal, positive off-diagonal
    pos_counts  per-point count of label-1 observations
    neg_counts  per-point count of label-0 observations
    scale       divisor applied to raw distances (1.0 when not normalized)
    """

    distances: np.ndarray
    pos_counts: np.ndarray
    neg_counts: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        dist = np.ascontiguousarray(np.asarray(self.distances, dtype=float))
        pos = np.asarray(self.pos_counts, dtype=np.int64)
        neg = np.asarray(self.neg_counts, dtype=np.int64)
        _validate_square(dist)
        n = dist.shape[0]
        if pos.shape != (n,) or neg.shape != (n,):
            raise DataError("label count vectors must match the distance matrix size")
        if np.any(pos < 0) or np.any(neg < 0):
            raise DataError("label counts must be nonnegative")
        if np.any(pos + neg < 1):
            i = int(np.argmin(pos + neg))
            raise DataError(f"point {i} has no observations")
        off = dist[~np.eye(n, dtype=bool)]
        if off.size and off.min() <= 0.0:
            raise DataError("off-diagonal distances must be positive after merging")
        for name, arr in (("distances", dist), ("pos_counts", pos), ("neg_counts", neg)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.distances.shape[0]

    @property
    def n_observations(self) -> int:
        return int((self.pos_counts + self.neg_counts).sum())

    @property
    def weights(self) -> np.ndarray:
        return self.pos_counts + self.neg_counts


@dataclass(frozen=True)
class TruncationParams:
    """Truncation level theta in (0, 1/2) and doubling dimension >= 1."""

    theta: float
    ddim: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.theta < 0.5:
            raise DataError(f"theta must lie in (0, 0.5), got {self.theta}")
        if self.ddim < 1.0:
            raise DataError(f"doubling dimension must be >= 1, got {self.ddim}")


def default_theta(n: int, ddim: float) -> float:
    """Truncation level n**(-1/(ddim+2)), capped at 0.49."""
    if n < 1:
        raise DataError(f"sample size must be >= 1, got {n}")
    if ddim < 1.0:
        raise DataError(f"doubling dimension must be >= 1, got {ddim}")
    return min(float(n) ** (-1.0 / (ddim + 2.0)), THETA_CAP)


@dataclass(frozen=True)
class IngestResult:
    sample: Sample
    coords: np.ndarray | None  # merged representatives, original units
    norm_p: float


def load_sample(source, mode="coords", *, norm_p=2.0, normalize=True) -> IngestResult:
    """Parse labeled CSV text (or a stream) into a merged Sample.

    mode      'coords' for x1..xk,label rows; 'matrix' for d1..dn,label rows
    norm_p    p-norm used for coordinate mode distances (>= 1 or inf)
    normalize divide distances by the diameter so the largest is 1
    """
    if mode not in ("coords", "matrix"):
        raise DataError(f"unknown mode: {mode!r} (expected 'coords' or 'matrix')")
    if mode == "coords" and not (norm_p >= 1.0):
        raise DataError(f"norm_p must be >= 1, got {norm_p}")
    header, data_rows = _read_rows(source)
    values, labels = _parse_table(header, data_rows, with_label=True)
    if values.shape[0] == 0:
        raise DataError("no data rows")

    coords = None
    if mode == "coords":
        coords = values
        dist = pairwise_distances(coords, norm_p)
    else:
        if values.shape[0] != values.shape[1]:
            raise DataError(
                f"matrix mode needs as many rows as distance columns: "
                f"{values.shape[0]} rows, {values.shape[1]} columns"
            )
        dist = values
        _validate_square(dist)

    scale = 1.0
    if normalize:
        diameter = float(dist.max())
        if diameter > 0.0:
            dist = dist / diameter
            scale = diameter

    merged, pos, neg, keep = _merge_duplicates(dist, labels)
    if coords is not None:
        coords = coords[keep]
    sample = Sample(distances=merged, pos_counts=pos, neg_counts=neg, scale=scale)
    return IngestResult(sample=sample, coords=coords, norm_p=float(norm_p))


def load_query_points(source) -> np.ndarray:
    """Parse unlabeled coordinate rows (columns x1..xk)."""
    header, data_rows = _read_rows(source)
    if header[-1].strip().lower() == "label":
        raise DataError("query file must not contain a label column")
    values, _ = _parse_table(header, data_rows, with_label=False)
    return values


def load_query_matrix(source, n_train: int) -> np.ndarray:
    """Parse rows of distances to the n_train reference points (columns d1..dn)."""
    header, data_rows = _read_rows(source)
    if header[-1].strip().lower() == "label":
        raise DataError("query file must not contain a label column")
    values, _ = _parse_table(header, data_rows, with_label=False)
    if values.shape[1] != n_train:
        raise DataError(
            f"expected {n_train} distance columns (one per reference point), got {values.shape[1]}"
        )
    return values


def load_labeled_queries(source, mode, n_train: int | None = None):
    """Parse a labeled holdout file; returns (values, labels).

    Coordinate mode rows are coordinates; matrix mode rows are distances to
    the reference points.
    """
    header, data_rows = _read_rows(source)
    values, labels = _parse_table(header, data_rows, with_label=True)
    if mode == "matrix" and n_train is not None and values.shape[1] != n_train:
        raise DataError(
            f"expected {n_train} distance columns (one per reference point), got {values.shape[1]}"
        )
    return values, labels


def check_triangle_inequality(sample: Sample, tol: float = 1e-12):
    """Return all (i, j, k) with d(i,j) > d(i,k) + d(k,j) + tol, i < j.

    Advisory: the fitted polytope is nonempty either way, so violations are
    reported rather than rejected.
    """
    d = sample.distances
    n = sample.n
    viol = d[:, :, None] > d[:, None, :] + d.T[None, :, :] + tol
    out = []
    for i, j, k in np.argwhere(viol):
        if i < j and k != i and k != j:
            out.append((int(i), int(j), int(k)))
    return out


def sample_to_matrix_csv(sample: Sample) -> str:
    """Serialize a Sample as matrix-mode CSV, expanding merged duplicates.

    Loading the result (with or without normalization, the diameter is
    already 1) reproduces the sample exactly.
    """
    reps = np.repeat(np.arange(sample.n), np.asarray(sample.weights))
    big = sample.distances[np.ix_(reps, reps)]
    labels = []
    for i in range(sample.n):
        labels.extend([1] * int(sample.pos_counts[i]))
        labels.extend([0] * int(sample.neg_counts[i]))
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow([f"d{i + 1}" for i in range(len(reps))] + ["label"])
    for row, lab in zip(big, labels):
        writer.writerow([repr(float(v)) for v in row] + [lab])
    return buf.getvalue()
