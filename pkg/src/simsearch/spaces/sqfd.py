"""Signature quadratic form distance over image cluster signatures.

An object is a set of clusters, each a 7-dimensional centroid plus a weight;
weights sum to one.  Comparing two signatures builds a combined weight vector
(weights of the first, negated weights of the second) and a similarity matrix
from pairwise Euclidean centroid distances, transformed by one of three
functions: negation, the heuristic 1/(alpha+d), or the Gaussian
exp(-alpha*d^2).  The distance is the square root of the quadratic form.

Text rows hold groups of 8 numbers per cluster: weight first, then the
centroid coordinates.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..data import parse_dense_line
from .base import Space, SpaceError, register_space

CENTROID_DIM = 7
WEIGHT_TOLERANCE = 1e-6
NEGATIVE_FORM_TOLERANCE = -1e-9


@dataclass(frozen=True)
class Signature:
    centroids: np.ndarray  # (n, 7) float64
    weights: np.ndarray    # (n,) float64, sum to 1


def make_signature(centroids, weights) -> Signature:
    c = np.asarray(centroids, dtype=np.float64).reshape(-1, CENTROID_DIM)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if c.shape[0] != w.shape[0] or c.shape[0] == 0:
        raise SpaceError("signature needs at least one (centroid, weight) cluster")
    if np.any(w <= 0) or abs(float(w.sum()) - 1.0) > WEIGHT_TOLERANCE:
        raise SpaceError("signature weights must be positive and sum to 1")
    c.flags.writeable = False
    w.flags.writeable = False
    return Signature(c, w)


class SqfdSpace(Space):
    """SQFD family member selected by the similarity transform ``func``."""

    def __init__(self, func: str, alpha: float | None = None):
        if func not in ("minus", "heuristic", "gaussian"):
            raise SpaceError(f"unknown SQFD similarity function {func!r}")
        if func != "minus" and alpha is None:
            raise SpaceError(f"SQFD {func} function requires parameter alpha")
        self.func = func
        self.alpha = alpha

    def parse_line(self, line: str):
        label, values = parse_dense_line(line)
        if len(values) % (CENTROID_DIM + 1) != 0:
            raise SpaceError(
                f"SQFD rows hold groups of {CENTROID_DIM + 1} numbers, got {len(values)}")
        grouped = np.asarray(values, dtype=np.float64).reshape(-1, CENTROID_DIM + 1)
        return label, make_signature(grouped[:, 1:], grouped[:, 0])

    def format_payload(self, payload: Signature) -> str:
        parts = []
        for w, c in zip(payload.weights, payload.centroids):
            parts.append(repr(float(w)))
            parts.extend(repr(float(v)) for v in c)
        return " ".join(parts)

    def make_payload(self, centroids, weights) -> Signature:
        return make_signature(centroids, weights)

    def _similarity(self, dist: np.ndarray) -> np.ndarray:
        if self.func == "minus":
            return -dist
        if self.func == "heuristic":
            return 1.0 / (self.alpha + dist)
        return np.exp(-self.alpha * dist * dist)

    def _distance(self, a: Signature, b: Signature) -> float:
        w = np.concatenate([a.weights, -b.weights])
        centroids = np.vstack([a.centroids, b.centroids])
        diff = centroids[:, None, :] - centroids[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        form = float(w @ self._similarity(dist) @ w)
        if form < 0.0:
            if form < NEGATIVE_FORM_TOLERANCE:
                warnings.warn(
                    f"SQFD quadratic form is negative ({form:.3e}); clamping to 0",
                    RuntimeWarning, stacklevel=2)
            form = 0.0
        return math.sqrt(form)


def _register_all():
    register_space("sqfd_minus_func", lambda p, dt: SqfdSpace("minus"))
    register_space(
        "sqfd_heuristic_func",
        lambda p, dt: SqfdSpace("heuristic", p.get("alpha", "real", required=True)))
    register_space(
        "sqfd_gaussian_func",
        lambda p, dt: SqfdSpace("gaussian", p.get("alpha", "real", required=True)))


_register_all()
