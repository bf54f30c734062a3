"""Independent reference implementations used only by the tests.

Everything here is deliberately naive: direct formulas in pure Python and
exhaustive enumeration, sharing no code with the package.
"""

import itertools
import math
import statistics


def l2_cost(values, a, b):
    seg = values[a:b]
    mean = sum(seg) / len(seg)
    return sum((x - mean) ** 2 for x in seg)


def rbf_gamma(values):
    dists = [abs(x - y) for x, y in itertools.combinations(values, 2)]
    med = statistics.median(dists)
    return 1.0 if med == 0 else 1.0 / (2.0 * med * med)


def rbf_cost(values, a, b, gamma):
    seg = values[a:b]
    m = len(seg)
    total = sum(math.exp(-gamma * (x - y) ** 2) for x in seg for y in seg)
    return m - total / m


def segmentations(n, min_size):
    """All breakpoint lists (ending in n) whose segments have length >= min_size."""
    inner = range(min_size, n - min_size + 1)
    for k in range(0, n // min_size):
        for combo in itertools.combinations(inner, k):
            bkps = list(combo) + [n]
            starts = [0] + list(combo)
            if all(e - s >= min_size for s, e in zip(starts, bkps)):
                yield bkps


def _table(n, cost, min_size):
    return {(a, b): cost(a, b) for a in range(n) for b in range(a + min_size, n + 1)}


def brute_force_penalized(values, penalty, min_size=2, cost=None):
    """(objective, bkps) minimizing sum of costs + penalty * #change points."""
    n = len(values)
    cost = cost or (lambda a, b: l2_cost(values, a, b))
    table = _table(n, cost, min_size)
    best = None
    for bkps in segmentations(n, min_size):
        starts = [0] + bkps[:-1]
        obj = sum(table[(s, e)] for s, e in zip(starts, bkps)) + penalty * (len(bkps) - 1)
        if best is None or obj < best[0]:
            best = (obj, bkps)
    return best


def brute_force_fixed_k(values, n_bkps, cost, min_size=2):
    """(total cost, bkps) over all placements of exactly n_bkps change points."""
    n = len(values)
    table = _table(n, cost, min_size)
    best = None
    for bkps in segmentations(n, min_size):
        if len(bkps) - 1 != n_bkps:
            continue
        starts = [0] + bkps[:-1]
        total = sum(table[(s, e)] for s, e in zip(starts, bkps))
        if best is None or total < best[0]:
            best = (total, bkps)
    return best


def rand_index_pairs(pred_bkps, truth_bkps, n):
    def label(bkps):
        out, start = [], 0
        for k, end in enumerate(bkps):
            out += [k] * (end - start)
            start = end
        return out

    a, b = label(pred_bkps), label(truth_bkps)
    pairs = list(itertools.combinations(range(n), 2))
    agree = sum((a[i] == a[j]) == (b[i] == b[j]) for i, j in pairs)
    return agree / len(pairs)
