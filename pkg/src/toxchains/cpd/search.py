"""Change-point search methods.

All detectors return breakpoints the way ``ruptures`` does: a strictly
increasing list of segment ends whose last element is ``n``; every element
but the last is a change point. Ties are always broken toward the earliest
index.
"""

from __future__ import annotations

import math
from typing import Optional, Union

import numpy as np

from ..errors import ConfigError, SignalTooShortError
from .costs import Cost, as_signal, get_cost

MIN_SIZE = 2

# relative slack for "equal" objective values; keeps tie-breaking stable
# against last-bit rounding differences
_REL_TOL = 1e-12

CostLike = Union[str, Cost]


def _lt(x: float, y: float) -> bool:
    """``x < y`` by more than rounding noise."""
    return x < y - _REL_TOL * max(1.0, abs(x), abs(y))


# median of the chi-square distribution with one degree of freedom
_CHI2_1_MEDIAN = 0.45493642311957283


def noise_variance(cost: Cost) -> float:
    """Robust within-segment noise variance on the cost's own scale.

    Each window of ``min_length + 1`` consecutive samples has one residual
    degree of freedom, so for Gaussian noise its cost is ``var * chi2(1)``;
    the median over all windows, divided by the chi-square median, ignores
    the few windows that straddle a change. Falls back to the overall sample
    variance ``cost.error(0, n) / (n - 1)`` when the median is zero.
    """
    m = cost.min_length + 1
    windows = [cost.error(t, t + m) for t in range(cost.n - m + 1)]
    var = float(np.median(windows)) / _CHI2_1_MEDIAN if windows else 0.0
    if var <= 0.0:
        var = cost.error(0, cost.n) / (cost.n - 1)
    return var


def default_penalty(cost: Cost) -> float:
    """Penalty per change point used when neither penalty nor n_bkps is given.

    * unit-scale kernels (rbf, cosine: ``k(u, u) = 1``): ``log(n) / 3``. Their
      feature-space variance is bounded by 1 and the median-heuristic
      bandwidth makes it too signal-dependent to estimate from the data.
    * other costs: BIC-style ``2 * var * log(n)`` with ``var`` from
      :func:`noise_variance`.

    Returns 1.0 for a signal with zero variance, where every positive
    penalty gives the same (empty) segmentation.
    """
    n = cost.n
    if cost.name in ("rbf", "cosine"):
        return math.log(n) / 3.0
    pen = 2.0 * noise_variance(cost) * math.log(n)
    return pen if pen > 0 else 1.0


def _prepare(signal, cost: CostLike, min_size: int, cost_params=None) -> tuple[np.ndarray, Cost]:
    if min_size < 1:
        raise ConfigError("min_size must be at least 1")
    y = as_signal(signal)
    c = get_cost(cost, **(cost_params or {}))
    if min_size < c.min_length:
        raise ConfigError(f"{c.name} cost needs min_size >= {c.min_length}")
    if y.shape[0] < 2 * min_size:
        raise SignalTooShortError(f"signal of length {y.shape[0]} is shorter than 2 * min_size = {2 * min_size}")
    c.fit(y)
    return y, c


def _resolve_stop(cost: Cost, n_bkps, penalty, min_size):
    if n_bkps is not None and penalty is not None:
        raise ConfigError("give either n_bkps or penalty, not both")
    if n_bkps is not None:
        if n_bkps < 0:
            raise ConfigError("n_bkps must be non-negative")
        if n_bkps > cost.n // min_size - 1:
            raise ConfigError(
                f"n_bkps={n_bkps} is infeasible for n={cost.n} with min_size={min_size} "
                f"(at most {cost.n // min_size - 1})"
            )
        return n_bkps, None
    if penalty is None:
        penalty = default_penalty(cost)
    if not penalty > 0:
        raise ConfigError("penalty must be positive")
    return None, penalty


def _backtrack(prev: list, n: int) -> list[int]:
    bkps = [n]
    t = n
    while prev[t] > 0:
        t = prev[t]
        bkps.append(t)
    return bkps[::-1]


def _optimal_partition(cost: Cost, penalty: float, min_size: int, prune: bool) -> list[int]:
    n = cost.n
    inf = math.inf
    f = [inf] * (n + 1)
    prev = [-1] * (n + 1)
    f[0] = -penalty
    candidates: list[int] = [0]
    # start -> time it was found dominated
    pruned_at: dict[int, int] = {}
    for t in range(min_size, n + 1):
        # a start dominated at time u is only beaten via split u, which
        # becomes usable for ends t >= u + min_size
        candidates = [s for s in candidates if t - pruned_at.get(s, t) < min_size]
        eligible = [s for s in candidates if t - s >= min_size]
        best, arg = inf, -1
        totals = {}
        for s in eligible:
            total = f[s] + cost.error(s, t)
            totals[s] = total
            if arg < 0 or _lt(total + penalty, best):
                best, arg = total + penalty, s
        f[t], prev[t] = best, arg
        if prune:
            # s can never again be optimal once f[s] + c(s, t) exceeds f[t]
            slack = _REL_TOL * max(1.0, abs(best))
            for s in eligible:
                if totals[s] > best + slack:
                    pruned_at.setdefault(s, t)
        candidates.append(t)
    return _backtrack(prev, n)


def detect_pelt(
    signal,
    cost: CostLike = "l2",
    penalty: Optional[float] = None,
    min_size: int = MIN_SIZE,
    cost_params: Optional[dict] = None,
) -> list[int]:
    """Exact penalized segmentation by pruned dynamic programming.

    Minimizes ``sum of segment costs + penalty * (number of change points)``.
    """
    _, c = _prepare(signal, cost, min_size, cost_params)
    _, penalty = _resolve_stop(c, None, penalty, min_size)
    return _optimal_partition(c, penalty, min_size, prune=True)


def _fixed_k_partition(cost: Cost, n_bkps: int, min_size: int) -> list[int]:
    """Minimum total cost over all segmentations with exactly ``n_bkps`` change points."""
    n = cost.n
    if n_bkps == 0:
        return [n]
    inf = math.inf
    n_seg = n_bkps + 1
    # best[k][t]: min cost of splitting [0, t) into k segments
    best = [[inf] * (n + 1) for _ in range(n_seg + 1)]
    prev = [[-1] * (n + 1) for _ in range(n_seg + 1)]
    for t in range(min_size, n + 1):
        best[1][t] = cost.error(0, t)
        prev[1][t] = 0
    for k in range(2, n_seg + 1):
        for t in range(k * min_size, n + 1):
            b, arg = inf, -1
            for s in range((k - 1) * min_size, t - min_size + 1):
                if best[k - 1][s] == inf:
                    continue
                total = best[k - 1][s] + cost.error(s, t)
                if arg < 0 or _lt(total, b):
                    b, arg = total, s
            best[k][t], prev[k][t] = b, arg
    bkps = [n]
    t = n
    for k in range(n_seg, 1, -1):
        t = prev[k][t]
        bkps.append(t)
    return bkps[::-1]


KERNELS = {"rbf": "rbf", "cosine": "cosine", "linear": "linear-kernel", "linear-kernel": "linear-kernel"}


def detect_kernelcpd(
    signal,
    kernel: str = "rbf",
    n_bkps: Optional[int] = None,
    penalty: Optional[float] = None,
    min_size: int = MIN_SIZE,
    kernel_params: Optional[dict] = None,
) -> list[int]:
    """Exact kernel change-point detection.

    With ``n_bkps`` the segmentation with that many change points and the
    lowest total kernel cost is returned; otherwise the penalized objective
    is minimized exactly (``penalty`` defaults to :func:`default_penalty`).
    """
    if isinstance(kernel, str):
        try:
            kernel = KERNELS[kernel]
        except KeyError:
            raise ConfigError(f"unknown kernel {kernel!r}; choose rbf, cosine or linear") from None
    _, c = _prepare(signal, kernel, min_size, kernel_params)
    n_bkps, penalty = _resolve_stop(c, n_bkps, penalty, min_size)
    if n_bkps is not None:
        return _fixed_k_partition(c, n_bkps, min_size)
    return _optimal_partition(c, penalty, min_size, prune=False)


def _best_split(cost: Cost, a: int, b: int, min_size: int):
    """Best single split of ``[a, b)``: ``(gain, index)`` or ``None``."""
    whole = cost.error(a, b)
    best = None
    for t in range(a + min_size, b - min_size + 1):
        gain = whole - cost.error(a, t) - cost.error(t, b)
        if best is None or _lt(best[0], gain):
            best = (gain, t)
    return best


def detect_binseg(
    signal,
    cost: CostLike = "l2",
    n_bkps: Optional[int] = None,
    penalty: Optional[float] = None,
    min_size: int = MIN_SIZE,
    cost_params: Optional[dict] = None,
) -> list[int]:
    """Greedy binary segmentation.

    Each step performs the single split (over all current segments) that
    lowers the total cost the most. Stops after ``n_bkps`` splits, or, in
    penalized mode, once the best gain falls below ``penalty``.
    """
    _, c = _prepare(signal, cost, min_size, cost_params)
    n_bkps, penalty = _resolve_stop(c, n_bkps, penalty, min_size)
    bkps = [0, c.n]
    splits: dict[tuple[int, int], Optional[tuple[float, int]]] = {}
    while n_bkps is None or len(bkps) - 2 < n_bkps:
        best = None
        for a, b in zip(bkps, bkps[1:]):
            if (a, b) not in splits:
                splits[(a, b)] = _best_split(c, a, b, min_size)
            cand = splits[(a, b)]
            if cand is not None and (best is None or _lt(best[0], cand[0])):
                best = cand
        if best is None:
            break
        if penalty is not None and best[0] < penalty:
            break
        bkps = sorted(bkps + [best[1]])
    return bkps[1:]


def detect_bottomup(
    signal,
    cost: CostLike = "l2",
    n_bkps: Optional[int] = None,
    penalty: Optional[float] = None,
    min_size: int = MIN_SIZE,
    cost_params: Optional[dict] = None,
) -> list[int]:
    """Greedy bottom-up merging.

    Starts from breakpoints on a regular grid of step ``min_size`` and
    repeatedly removes the breakpoint whose removal increases the total cost
    the least. Stops at ``n_bkps`` change points, or, in penalized mode,
    when the cheapest removal costs more than ``penalty``.
    """
    _, c = _prepare(signal, cost, min_size, cost_params)
    n_bkps, penalty = _resolve_stop(c, n_bkps, penalty, min_size)
    n = c.n
    # last grid point is dropped if it would leave a short final segment
    inner = [t for t in range(min_size, n, min_size) if n - t >= min_size]
    bkps = [0] + inner + [n]
    while len(bkps) > 2:
        if n_bkps is not None and len(bkps) - 2 <= n_bkps:
            break
        best = None
        for i in range(1, len(bkps) - 1):
            a, t, b = bkps[i - 1], bkps[i], bkps[i + 1]
            increase = c.error(a, b) - c.error(a, t) - c.error(t, b)
            if best is None or _lt(increase, best[0]):
                best = (increase, i)
        if penalty is not None and best[0] > penalty:
            break
        del bkps[best[1]]
    return bkps[1:]


METHODS = {
    "pelt": detect_pelt,
    "kernelcpd": detect_kernelcpd,
    "binseg": detect_binseg,
    "bottomup": detect_bottomup,
}


def detect(signal, method: str = "pelt", cost: str = "rbf", n_bkps=None, penalty=None,
           min_size: int = MIN_SIZE, cost_params: Optional[dict] = None) -> list[int]:
    """Dispatch to one of the search methods by name."""
    method = method.lower()
    if method == "pelt":
        if n_bkps is not None:
            raise ConfigError("pelt is penalized only; use penalty, not n_bkps")
        return detect_pelt(signal, cost, penalty, min_size, cost_params)
    if method == "kernelcpd":
        return detect_kernelcpd(signal, cost, n_bkps, penalty, min_size, cost_params)
    if method == "binseg":
        return detect_binseg(signal, cost, n_bkps, penalty, min_size, cost_params)
    if method == "bottomup":
        return detect_bottomup(signal, cost, n_bkps, penalty, min_size, cost_params)
    raise ConfigError(f"unknown method {method!r}; choose from {sorted(METHODS)}")
