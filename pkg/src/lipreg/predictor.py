"""Prediction by exact Lipschitz extension of the fitted values.

A query at distances d_i from the reference points receives the value of
the minimal-constant extension: over all pairs, the candidate

    y_ij = (w_j d_i + w_i d_j) / (d_i + d_j)

of the pair attaining the largest induced constant |w_i - w_j|/(d_i+d_j).
That candidate coincides with the midpoint

    ( max_i (w_i - Lhat d_i) + min_j (w_j + Lhat d_j) ) / 2

computed at the attained constant Lhat; both are evaluated and compared
at runtime. Since Lhat never exceeds the model's Lipschitz constant, the
prediction function inherits it. Results are clamped to [theta, 1-theta].
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import Sample, pairwise_distances
from .exceptions import DataError, InvariantError, ModelError

MODEL_FORMAT = "lipreg-model"
MODEL_VERSION = 1
EXTENSION_AGREEMENT_TOL = 1e-9
LIPSCHITZ_CHECK_TOL = 1e-9


@dataclass(frozen=True)
class Model:
    """Fitted values bound to the sample geometry they must stay
    Lipschitz against. Coordinate-mode models keep the reference
    coordinates (original units) and the p-norm; matrix-mode models rely
    on the stored normalized distances."""

    sample: Sample
    w_star: np.ndarray
    lipschitz_L: float
    theta: float
    scale: float
    mode: str
    coords: np.ndarray | None = None
    norm_p: float = 2.0
    ddim: float | None = None

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.w_star, dtype=float))
        if w.shape != (self.sample.n,):
            raise ModelError(f"w_star must have shape ({self.sample.n},), got {w.shape}")
        if not 0.0 < self.theta < 0.5:
            raise ModelError(f"theta must lie in (0, 0.5), got {self.theta}")
        if self.lipschitz_L <= 0.0:
            raise ModelError(f"lipschitz_L must be positive, got {self.lipschitz_L}")
        if self.scale <= 0.0:
            raise ModelError(f"scale must be positive, got {self.scale}")
        if self.mode not in ("coords", "matrix"):
            raise ModelError(f"unknown mode: {self.mode!r}")
        if self.mode == "coords":
            if self.coords is None:
                raise ModelError("coordinate mode requires reference coordinates")
            coords = np.ascontiguousarray(np.asarray(self.coords, dtype=float))
            if coords.ndim != 2 or coords.shape[0] != self.sample.n:
                raise ModelError(
                    f"coords must have {self.sample.n} rows, got shape {coords.shape}"
                )
            coords.setflags(write=False)
            object.__setattr__(self, "coords", coords)
        out = (w < self.theta) | (w > 1.0 - self.theta)
        if out.any():
            i = int(np.flatnonzero(out)[0])
            raise ModelError(
                f"fitted value w[{i}] = {w[i]:g} outside [theta, 1-theta] "
                f"= [{self.theta}, {1.0 - self.theta}]"
            )
        gap = np.abs(w[:, None] - w[None, :])
        limit = self.lipschitz_L * self.sample.distances + LIPSCHITZ_CHECK_TOL
        over = gap > limit
        if over.any():
            i, j = (int(v) for v in np.argwhere(over)[0])
            raise ModelError(
                f"fitted values violate the Lipschitz bound at pair ({i},{j}): "
                f"|{w[i]:g} - {w[j]:g}| > L*d = {self.lipschitz_L * self.sample.distances[i, j]:g}"
            )
        w.setflags(write=False)
        object.__setattr__(self, "w_star", w)

    @property
    def n(self) -> int:
        return self.sample.n


def _extension_candidates(w, dists):
    """(pair-enumeration value, midpoint value, attained constant).

    Requires every distance strictly positive and at least two points.
    """
    n = len(w)
    gap = np.abs(w[:, None] - w[None, :])
    dsum = dists[:, None] + dists[None, :]
    induced = gap / dsum
    np.fill_diagonal(induced, -1.0)
    i, j = np.unravel_index(int(np.argmax(induced)), induced.shape)
    y_pair = float((w[j] * dists[i] + w[i] * dists[j]) / (dists[i] + dists[j]))
    lhat = float(induced[i, j])
    y_mid = 0.5 * (float((w - lhat * dists).max()) + float((w + lhat * dists).min()))
    return y_pair, y_mid, lhat


def extend(model: Model, dists) -> float:
    """Predict at a query given its normalized distances to the references.

    A zero distance returns that reference's fitted value exactly.
    """
    d = np.asarray(dists, dtype=float)
    if d.shape != (model.n,):
        raise DataError(f"expected {model.n} distances, got shape {d.shape}")
    if (d < 0).any():
        i = int(np.argmin(d))
        raise DataError(f"negative distance at position {i}: {d[i]:g}")
    w = model.w_star
    zero = np.flatnonzero(d == 0.0)
    if zero.size:
        vals = w[zero]
        if zero.size > 1 and float(vals.max() - vals.min()) > 1e-12:
            raise DataError(
                f"query at distance 0 from references {zero.tolist()} "
                f"with different fitted values {vals.tolist()}"
            )
        return float(vals[0])
    if model.n == 1:
        return float(w[0])
    y_pair, y_mid, lhat = _extension_candidates(w, d)
    if abs(y_pair - y_mid) > EXTENSION_AGREEMENT_TOL:
        raise InvariantError(
            f"extension candidates disagree: pair {float(y_pair)!r} vs midpoint {float(y_mid)!r}"
        )
    return float(np.clip(y_mid, model.theta, 1.0 - model.theta))


def query_distances(model: Model, queries) -> np.ndarray:
    """Normalized distances from query rows to the reference points.

    Coordinate mode takes coordinate rows in original units; matrix mode
    takes rows of raw distances to the references. Both are divided by the
    stored normalization scale.
    """
    q = np.asarray(queries, dtype=float)
    if q.ndim != 2:
        raise DataError(f"queries must be a 2-d array, got shape {q.shape}")
    if model.mode == "coords":
        if q.shape[1] != model.coords.shape[1]:
            raise DataError(
                f"queries have {q.shape[1]} coordinates, references have "
                f"{model.coords.shape[1]}"
            )
        diff = np.abs(q[:, None, :] - model.coords[None, :, :])
        if np.isinf(model.norm_p):
            raw = diff.max(axis=2)
        else:
            raw = (diff ** model.norm_p).sum(axis=2) ** (1.0 / model.norm_p)
    else:
        if q.shape[1] != model.n:
            raise DataError(f"expected {model.n} distance columns, got {q.shape[1]}")
        if (q < 0).any():
            r, c = (int(v) for v in np.argwhere(q < 0)[0])
            raise DataError(f"negative distance at row {r}, column {c}: {q[r, c]:g}")
        raw = q
    return raw / model.scale


def predict_batch(model: Model, queries) -> np.ndarray:
    """Predictions for query rows (coordinates or raw distance rows)."""
    dists = query_distances(model, queries)
    return np.array([extend(model, row) for row in dists])


def model_to_document(model: Model) -> dict:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "mode": model.mode,
        "lipschitz": model.lipschitz_L,
        "theta": model.theta,
        "scale": model.scale,
        "ddim": model.ddim,
        "w_star": model.w_star.tolist(),
        "pos_counts": model.sample.pos_counts.tolist(),
        "neg_counts": model.sample.neg_counts.tolist(),
    }
    if model.mode == "coords":
        doc["coords"] = model.coords.tolist()
        doc["norm_p"] = model.norm_p
    else:
        doc["distances"] = model.sample.distances.tolist()
    return doc


def model_from_document(doc) -> Model:
    if not isinstance(doc, dict):
        raise ModelError(f"model document must be an object, got {type(doc).__name__}")
    if doc.get("format") != MODEL_FORMAT:
        raise ModelError(f"not a model document (format = {doc.get('format')!r})")
    if doc.get("version") != MODEL_VERSION:
        raise ModelError(f"unsupported model version: {doc.get('version')!r}")
    required = {"mode", "lipschitz", "theta", "scale", "w_star", "pos_counts", "neg_counts"}
    missing = sorted(required - doc.keys())
    if missing:
        raise ModelError(f"model document missing fields: {', '.join(missing)}")
    mode = doc["mode"]
    try:
        pos = np.asarray(doc["pos_counts"], dtype=np.int64)
        neg = np.asarray(doc["neg_counts"], dtype=np.int64)
        w = np.asarray(doc["w_star"], dtype=float)
        norm_p = float(doc.get("norm_p", 2.0))
        coords = None
        if mode == "coords":
            if "coords" not in doc:
                raise ModelError("coordinate-mode document missing 'coords'")
            coords = np.asarray(doc["coords"], dtype=float)
            if coords.ndim != 2:
                raise ModelError(f"'coords' must be a matrix, got shape {coords.shape}")
            dist = pairwise_distances(coords, norm_p) / float(doc["scale"])
        elif mode == "matrix":
            if "distances" not in doc:
                raise ModelError("matrix-mode document missing 'distances'")
            dist = np.asarray(doc["distances"], dtype=float)
        else:
            raise ModelError(f"unknown mode: {mode!r}")
        sample = Sample(dist, pos, neg, scale=float(doc["scale"]))
    except (ModelError, DataError):
        raise
    except (TypeError, ValueError) as exc:
        raise ModelError(f"malformed model document: {exc}") from exc
    ddim = doc.get("ddim")
    return Model(
        sample=sample,
        w_star=w,
        lipschitz_L=float(doc["lipschitz"]),
        theta=float(doc["theta"]),
        scale=float(doc["scale"]),
        mode=mode,
        coords=coords,
        norm_p=norm_p,
        ddim=float(ddim) if ddim is not None else None,
    )


def save_model(model: Model, sink) -> None:
    """Write the model as versioned JSON to a writable text sink."""
    json.dump(model_to_document(model), sink, indent=1)
    sink.write("\n")


def load_model(source) -> Model:
    """Read a model from JSON text or a readable text source, re-checking
    the range and Lipschitz invariants."""
    if isinstance(source, str):
        text = source
    else:
        text = source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"model document is not valid JSON: {exc}") from exc
    return model_from_document(doc)
