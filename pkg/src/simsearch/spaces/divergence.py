"""Statistical divergences: Jensen-Shannon and the Bregman family.

Three implementation tiers exist for the Jensen-Shannon divergence:

* ``slow``   - direct evaluation of the definition;
* ``fast``   - element logarithms are precomputed when a payload is created,
  only the residual logarithm over [1, 2] is computed exactly;
* ``approx`` - the residual logarithm is interpolated from a lookup table.

KL-type divergences (regular KL, generalized KL, Itakura-Saito) follow the
same slow/fast split and exist in argument-swapped ``rq`` variants for
right-oriented queries.  Natural logarithms throughout; 0*log 0 := 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..data import parse_dense_line
from .base import Space, SpaceError, check_same_dim, register_space

DEFAULT_LOG_TABLE_CELLS = 1 << 16


@dataclass(frozen=True)
class PrecompLogVector:
    """Vector plus precomputed natural logs (0 where the value is 0)."""

    values: np.ndarray
    logs: np.ndarray


def precompute_logs(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if np.any(values < 0):
        raise SpaceError("logarithm precomputation requires nonnegative elements")
    out = np.zeros_like(values)
    pos = values > 0
    out[pos] = np.log(values[pos])
    return out


class LogLookupTable:
    """Uniform grid of ln values over [1, 2] with linear interpolation."""

    def __init__(self, resolution: int = DEFAULT_LOG_TABLE_CELLS):
        if resolution < 2:
            raise SpaceError("log table needs at least 2 grid cells")
        self.resolution = resolution
        self.table = np.log1p(np.arange(resolution + 1) / resolution)

    def lookup(self, v):
        """Interpolated ln(v) for v in [1, 2] (scalar or array)."""
        t = (np.asarray(v, dtype=np.float64) - 1.0) * self.resolution
        idx = np.clip(t.astype(np.int64), 0, self.resolution - 1)
        frac = t - idx
        base = self.table[idx]
        return base + frac * (self.table[idx + 1] - base)


_SHARED_TABLE: LogLookupTable | None = None


def shared_log_table() -> LogLookupTable:
    global _SHARED_TABLE
    if _SHARED_TABLE is None:
        _SHARED_TABLE = LogLookupTable()
    return _SHARED_TABLE


class _DenseDivergenceSpace(Space):
    """Dense nonnegative-vector parsing shared by all divergence spaces."""

    #: "" (plain payloads) or anything else -> PrecompLogVector payloads
    precompute = False
    #: minimum allowed element value is 0; subclasses may demand > 0
    strictly_positive = False

    def __init__(self):
        self._dim: int | None = None

    def _validate(self, vec: np.ndarray) -> None:
        if self.strictly_positive:
            if np.any(vec <= 0):
                raise SpaceError(f"{self.name or type(self).__name__}: "
                                 "elements must be strictly positive")
        elif np.any(vec < 0):
            raise SpaceError(f"{self.name or type(self).__name__}: "
                             "elements must be nonnegative")

    def make_payload(self, values):
        vec = np.asarray(values, dtype=np.float64)
        self._validate(vec)
        narrowed = vec.astype(self.store_dtype)
        narrowed.flags.writeable = False
        if self.precompute:
            logs = precompute_logs(narrowed.astype(np.float64))
            logs.flags.writeable = False
            return PrecompLogVector(narrowed, logs)
        return narrowed

    def parse_line(self, line: str):
        label, values = parse_dense_line(line)
        payload = self.make_payload(values)
        dim = len(values)
        if self._dim is None:
            self._dim = dim
        elif dim != self._dim:
            raise SpaceError(
                f"row of dimension {dim} in a space of dimension {self._dim}")
        return label, payload

    def format_payload(self, payload) -> str:
        vals = payload.values if isinstance(payload, PrecompLogVector) else payload
        return " ".join(repr(float(v)) for v in vals)

    @staticmethod
    def _vals_logs(payload) -> tuple[np.ndarray, np.ndarray | None]:
        if isinstance(payload, PrecompLogVector):
            return (np.asarray(payload.values, dtype=np.float64),
                    payload.logs)
        return np.asarray(payload, dtype=np.float64), None

    def elem_count(self, payload) -> int:
        vals, _ = self._vals_logs(payload)
        return int(vals.shape[0])

    def dense_coords(self, payload) -> np.ndarray:
        vals, _ = self._vals_logs(payload)
        return vals

    def stack(self, payloads):
        vals = np.stack([self._vals_logs(p)[0] for p in payloads])
        vals.flags.writeable = False
        if self.precompute:
            logs = np.stack([self._vals_logs(p)[1] for p in payloads])
            logs.flags.writeable = False
            return vals, logs
        return vals, None

    def take(self, block, ids):
        vals, logs = block
        idx = np.asarray(ids, dtype=np.int64)
        return vals[idx], (None if logs is None else logs[idx])

    def _distance(self, x, y) -> float:
        xv, xl = self._vals_logs(x)
        yv, yl = self._vals_logs(y)
        check_same_dim(xv, yv)
        block = (xv.reshape(1, -1), None if xl is None else xl.reshape(1, -1))
        return float(self._batch_distance(block, y)[0])


def _js_divergence_rows(xv, xl, yv, yl, mode: str, table: LogLookupTable | None):
    """Row-wise Jensen-Shannon divergence; xv is 2-D, yv is 1-D."""
    if mode == "slow":
        with np.errstate(divide="ignore", invalid="ignore"):
            xlogx = np.where(xv > 0, xv * np.log(xv), 0.0)
            ylogy = np.where(yv > 0, yv * np.log(yv), 0.0)
            s = xv + yv
            slogs = np.where(s > 0, s * np.log(s / 2.0), 0.0)
        return 0.5 * (xlogx + ylogy - slogs).sum(axis=1)
    # decomposition: only log(1 + min/max) is unknown at payload-creation time
    lo = np.minimum(xv, yv)
    hi = np.maximum(xv, yv)
    hi_log = np.where(xv >= yv, xl, yl)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(hi > 0, lo / hi, 0.0)
    if mode == "fast":
        resid = np.log1p(ratio)
    else:
        resid = table.lookup(1.0 + ratio)
    half_sum = 0.5 * (xv + yv)
    mixed = np.where(hi > 0,
                     half_sum * (-math.log(2.0) + hi_log + resid),
                     0.0)
    own = 0.5 * (np.where(xv > 0, xv * xl, 0.0) + np.where(yv > 0, yv * yl, 0.0))
    return (own - mixed).sum(axis=1)


class JsDivergenceSpace(_DenseDivergenceSpace):
    """Jensen-Shannon divergence (or its square-root metric form)."""

    metric = False

    def __init__(self, mode: str = "slow",
                 table: LogLookupTable | None = None):
        super().__init__()
        if mode not in ("slow", "fast", "approx"):
            raise SpaceError(f"unknown JS mode {mode!r}")
        self.mode = mode
        self.precompute = mode != "slow"
        self.table = table or (shared_log_table() if mode == "approx" else None)

    def _batch_distance(self, block, y) -> np.ndarray:
        xv, xl = block
        yv, yl = self._vals_logs(y)
        div = _js_divergence_rows(xv, xl, yv, yl, self.mode, self.table)
        div = np.maximum(div, 0.0)
        if self.metric:
            return np.sqrt(div)
        return div


class JsMetricSpace(JsDivergenceSpace):
    metric = True


def _bregman_rows(xv, xl, yv, yl, family: str, fast: bool) -> np.ndarray:
    """Row-wise Bregman divergence of x from y (x is 2-D, y is 1-D).

    Payload elements are validated strictly positive at creation, so the
    kernels run unchecked.
    """
    if fast:
        logratio = xl - yl
    else:
        logratio = np.log(xv / yv)
    if family == "kl":
        return (xv * logratio).sum(axis=1)
    if family == "gen_kl":
        return (xv * logratio - xv + yv).sum(axis=1)
    if family == "itakura_saito":
        ratio = xv / yv
        if fast:
            return (ratio - logratio).sum(axis=1) - xv.shape[1]
        return (ratio - logratio - 1.0).sum(axis=1)
    raise SpaceError(f"unknown Bregman family {family!r}")


class BregmanSpace(_DenseDivergenceSpace):
    """KL, generalized KL, and Itakura-Saito divergences.

    ``swapped=True`` yields the right-query variant: the constructed distance
    evaluates the divergence with its two arguments exchanged.
    """

    strictly_positive = True

    def __init__(self, family: str, fast: bool = False, swapped: bool = False):
        super().__init__()
        if family not in ("kl", "gen_kl", "itakura_saito"):
            raise SpaceError(f"unknown Bregman family {family!r}")
        self.family = family
        self.fast = fast
        self.swapped = swapped
        self.precompute = fast

    # gradient structure used by the Bregman ball tree (left form only)
    @property
    def bregman_left(self) -> bool:
        return not self.swapped

    def grad(self, values: np.ndarray) -> np.ndarray:
        v = np.asarray(values, dtype=np.float64)
        if self.family == "kl":
            return 1.0 + np.log(v)
        if self.family == "gen_kl":
            return np.log(v)
        return -1.0 / v

    def grad_inv(self, dual: np.ndarray) -> np.ndarray:
        d = np.asarray(dual, dtype=np.float64)
        if self.family == "kl":
            return np.exp(d - 1.0)
        if self.family == "gen_kl":
            return np.exp(d)
        return -1.0 / d

    def payload_from_dual(self, dual: np.ndarray):
        """Payload for a gradient-space point, reusing the dual coordinates
        as (or for) the precomputed logs; dual images of positive vectors are
        always in-domain, so validation is skipped."""
        vals, logs = self.vals_logs_from_dual(dual)
        if self.precompute:
            return PrecompLogVector(vals, logs)
        return vals

    def vals_logs_from_dual(self, dual: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(values, logs) of the point whose gradient image is ``dual``."""
        d = np.asarray(dual, dtype=np.float64)
        if self.family == "kl":
            logs = d - 1.0
            return np.exp(logs), logs
        if self.family == "gen_kl":
            return np.exp(d), d
        vals = -1.0 / d
        return vals, np.log(vals)

    def div_vals(self, xv, xl, yv, yl) -> float:
        """Divergence of x from y over prepared (values, logs) arrays.

        Low-overhead scalar form of the batch kernel for bound computations;
        callers account for the evaluation in their distance counters.
        """
        if self.family == "kl":
            return float((xv * (xl - yl)).sum())
        if self.family == "gen_kl":
            return float((xv * (xl - yl) - xv + yv).sum())
        return float((xv / yv - (xl - yl)).sum()) - len(xv)

    def vals_logs_of(self, payload) -> tuple[np.ndarray, np.ndarray]:
        """(values, logs) for any payload, computing logs when not stored."""
        vals, logs = self._vals_logs(payload)
        if logs is None:
            logs = np.log(vals)
        return vals, logs

    def _batch_distance(self, block, y) -> np.ndarray:
        xv, xl = block
        yv, yl = self._vals_logs(y)
        if self.swapped:
            # divergence of y from each row: same kernels with roles exchanged
            if self.fast:
                logratio = yl - xl
            else:
                logratio = np.log(yv / xv)
            if self.family == "kl":
                return (yv * logratio).sum(axis=1)
            if self.family == "gen_kl":
                return (yv * logratio - yv + xv).sum(axis=1)
            ratio = yv / xv
            if self.fast:
                return (ratio - logratio).sum(axis=1) - xv.shape[1]
            return (ratio - logratio - 1.0).sum(axis=1)
        return _bregman_rows(xv, xl, yv, yl, self.family, self.fast)


def _register_all():
    register_space("jsdivslow", lambda p, dt: JsDivergenceSpace("slow"))
    register_space("jsdivfast", lambda p, dt: JsDivergenceSpace("fast"))
    register_space("jsdivfastapprox", lambda p, dt: JsDivergenceSpace("approx"))
    register_space("jsmetrslow", lambda p, dt: JsMetricSpace("slow"))
    register_space("jsmetrfast", lambda p, dt: JsMetricSpace("fast"))
    register_space("jsmetrfastapprox", lambda p, dt: JsMetricSpace("approx"))
    register_space("kldivfast", lambda p, dt: BregmanSpace("kl", fast=True))
    register_space("kldivfastrq",
                   lambda p, dt: BregmanSpace("kl", fast=True, swapped=True))
    register_space("kldivgenslow", lambda p, dt: BregmanSpace("gen_kl"))
    register_space("kldivgenfast", lambda p, dt: BregmanSpace("gen_kl", fast=True))
    register_space("kldivgenfastrq",
                   lambda p, dt: BregmanSpace("gen_kl", fast=True, swapped=True))
    register_space("itakurasaitoslow", lambda p, dt: BregmanSpace("itakura_saito"))
    register_space("itakurasaitofast",
                   lambda p, dt: BregmanSpace("itakura_saito", fast=True))
    register_space("itakurasaitofastrq",
                   lambda p, dt: BregmanSpace("itakura_saito", fast=True, swapped=True))


_register_all()
