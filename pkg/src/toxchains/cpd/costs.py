"""Segment cost functions.

A cost object is fitted once on the whole signal, then ``error(a, b)``
returns the cost of the half-open segment ``[a, b)``. All costs here are
"within-segment scatter" costs, so splitting a segment never increases the
total: ``error(a, c) >= error(a, b) + error(b, c)``. PELT relies on this.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np

from ..errors import ConfigError, IntervalError, SignalTooShortError

logger = logging.getLogger(__name__)


def as_signal(values) -> np.ndarray:
    """Return ``values`` as a float array of shape ``(n, d)``."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValueError(f"signal must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise SignalTooShortError(f"signal needs at least 2 samples, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("signal contains NaN or infinite values")
    return arr


class Cost:
    name = "base"
    #: shortest segment the cost is defined on
    min_length = 1

    def fit(self, signal) -> "Cost":
        self.signal = as_signal(signal)
        self.n = self.signal.shape[0]
        return self

    def _check(self, a: int, b: int):
        if not 0 <= a < b <= self.n:
            raise IntervalError(f"invalid segment [{a}, {b}) for signal of length {self.n}")
        if b - a < self.min_length:
            raise IntervalError(f"{self.name} cost needs segments of length >= {self.min_length}, got {b - a}")

    def error(self, a: int, b: int) -> float:
        raise NotImplementedError

    def sum_of_costs(self, bkps) -> float:
        start, total = 0, 0.0
        for end in bkps:
            total += self.error(start, end)
            start = end
        return total


class CostL2(Cost):
    """Sum of squared deviations from the segment mean."""

    name = "l2"

    def fit(self, signal):
        super().fit(signal)
        # centering limits cancellation in the sum-of-squares identity
        y = self.signal - self.signal.mean(axis=0)
        zero = np.zeros((1, y.shape[1]))
        self._cs = np.vstack([zero, np.cumsum(y, axis=0)])
        self._cs2 = np.concatenate([[0.0], np.cumsum(np.sum(y ** 2, axis=1))])
        return self

    def error(self, a, b):
        self._check(a, b)
        s = self._cs[b] - self._cs[a]
        val = self._cs2[b] - self._cs2[a] - float(s @ s) / (b - a)
        return max(val, 0.0)


class KernelCost(Cost):
    """``sum_t k(y_t, y_t) - (1/m) sum_{s,t} k(y_s, y_t)`` over the segment.

    The Gram matrix is computed once and summed through 2-D prefix sums, so
    each ``error`` call is O(1).
    """

    def gram(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def fit(self, signal):
        super().fit(signal)
        g = self.gram(self.signal)
        self._diag = np.concatenate([[0.0], np.cumsum(np.diag(g))])
        self._g = np.zeros((self.n + 1, self.n + 1))
        self._g[1:, 1:] = g.cumsum(axis=0).cumsum(axis=1)
        return self

    def error(self, a, b):
        self._check(a, b)
        g = self._g
        block = g[b, b] - g[a, b] - g[b, a] + g[a, a]
        val = self._diag[b] - self._diag[a] - block / (b - a)
        return max(val, 0.0)


def _sq_dists(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x ** 2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * x @ x.T
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def median_heuristic_gamma(x: np.ndarray) -> float:
    """``1 / (2 * median^2)`` with the median over pairwise distances ``i < j``.

    Falls back to 1.0 (with a warning) when the median distance is zero.
    """
    x = as_signal(x)
    d = np.sqrt(_sq_dists(x)[np.triu_indices(x.shape[0], k=1)])
    med = float(np.median(d))
    if med <= 0.0:
        warnings.warn("median pairwise distance is 0; using rbf gamma = 1.0", RuntimeWarning, stacklevel=3)
        return 1.0
    return 1.0 / (2.0 * med * med)


class CostRbf(KernelCost):
    """Gaussian kernel ``exp(-gamma * |u - v|^2)``.

    ``gamma`` defaults to the median heuristic on the fitted signal;
    ``bandwidth`` (sigma) sets ``gamma = 1 / (2 sigma^2)`` instead.
    """

    name = "rbf"

    def __init__(self, gamma: float = None, bandwidth: float = None):
        if gamma is not None and bandwidth is not None:
            raise ConfigError("give either gamma or bandwidth, not both")
        if bandwidth is not None:
            if not bandwidth > 0:
                raise ConfigError("bandwidth must be positive")
            gamma = 1.0 / (2.0 * bandwidth ** 2)
        if gamma is not None and not gamma > 0:
            raise ConfigError("gamma must be positive")
        self.gamma_param = gamma
        self.gamma = gamma

    def gram(self, x):
        if self.gamma_param is None:
            self.gamma = median_heuristic_gamma(x)
        return np.exp(-self.gamma * _sq_dists(x))


class CostCosine(KernelCost):
    """Cosine-similarity kernel; zero vectors have similarity 0 with everything."""

    name = "cosine"

    def gram(self, x):
        norms = np.linalg.norm(x, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        u = x / safe[:, None]
        g = u @ u.T
        zero = norms == 0
        g[zero, :] = 0.0
        g[:, zero] = 0.0
        return np.clip(g, -1.0, 1.0)


class CostLinearKernel(KernelCost):
    """Linear kernel ``<u, v>``; the kernel cost then coincides with l2."""

    name = "linear-kernel"

    def gram(self, x):
        return x @ x.T


class CostLinear(Cost):
    """Residual sum of squares of a least-squares line ``y ~ alpha + beta t``
    fitted within the segment (per dimension, summed)."""

    name = "linear"
    min_length = 2

    def fit(self, signal):
        super().fit(signal)
        t = np.arange(self.n, dtype=float)
        y = self.signal - self.signal.mean(axis=0)
        z = np.zeros((1, y.shape[1]))
        self._st = np.concatenate([[0.0], np.cumsum(t)])
        self._stt = np.concatenate([[0.0], np.cumsum(t * t)])
        self._sy = np.vstack([z, np.cumsum(y, axis=0)])
        self._syy = np.vstack([z, np.cumsum(y * y, axis=0)])
        self._sty = np.vstack([z, np.cumsum(t[:, None] * y, axis=0)])
        return self

    def error(self, a, b):
        self._check(a, b)
        m = b - a
        # center time on the segment to keep the normal equations well conditioned
        c = (a + b - 1) / 2.0
        st = self._st[b] - self._st[a]
        stt = self._stt[b] - self._stt[a]
        sy = self._sy[b] - self._sy[a]
        syy = self._syy[b] - self._syy[a]
        sty = self._sty[b] - self._sty[a]
        sxx = stt - 2 * c * st + m * c * c          # sum (t - c)^2
        sxy = sty - c * sy                           # sum (t - c) y
        ss_y = syy - sy * sy / m                     # sum (y - ybar)^2
        rss = ss_y - sxy * sxy / sxx
        return max(float(np.sum(rss)), 0.0)


COSTS = {
    "l2": CostL2,
    "rbf": CostRbf,
    "cosine": CostCosine,
    "linear": CostLinear,
    "linear-kernel": CostLinearKernel,
}


def get_cost(cost, **params) -> Cost:
    if isinstance(cost, Cost):
        return cost
    try:
        cls = COSTS[cost]
    except KeyError:
        raise ConfigError(f"unknown cost {cost!r}; choose from {sorted(COSTS)}") from None
    return cls(**params)


def _fitted(cost_cls, signal, **params):
    return cost_cls(**params).fit(signal)


def cost_l2(signal, a: int, b: int) -> float:
    return _fitted(CostL2, signal).error(a, b)


def cost_rbf(signal, a: int, b: int, bandwidth: float = None) -> float:
    return _fitted(CostRbf, signal, bandwidth=bandwidth).error(a, b)


def cost_linear(signal, a: int, b: int) -> float:
    return _fitted(CostLinear, signal).error(a, b)


def cost_cosine(signal, a: int, b: int) -> float:
    return _fitted(CostCosine, signal).error(a, b)
