import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_fixed_k, brute_force_penalized, l2_cost, rbf_cost, rbf_gamma
from toxchains.cpd import (
    CostL2,
    CostRbf,
    cost_cosine,
    cost_l2,
    cost_linear,
    cost_rbf,
    detect,
    detect_binseg,
    detect_bottomup,
    detect_kernelcpd,
    detect_pelt,
    get_cost,
)
from toxchains.errors import ConfigError, IntervalError, SignalTooShortError

STEP = [0, 0, 0, 5, 5, 5]
# kernelcpd takes kernels only; its linear kernel gives the l2 objective
LINEAR = {"pelt": "l2", "binseg": "l2", "bottomup": "l2", "kernelcpd": "linear"}
TWO_JUMPS = [0] * 4 + [5] * 4 + [0] * 4


@pytest.mark.parametrize("signal, a, b, expected", [
    ([5, 5, 5], 0, 3, 0.0),
    ([0, 2], 0, 2, 2.0),
    ([7, 1, 4], 1, 2, 0.0),
])
def test_cost_l2(signal, a, b, expected):
    assert cost_l2(signal, a, b) == pytest.approx(expected, abs=1e-12)


def test_cost_rbf_examples():
    assert cost_rbf([3.0, 9.0], 0, 1) == pytest.approx(0.0, abs=1e-12)
    assert cost_rbf([2.0, 2.0, 5.0], 0, 2) == pytest.approx(0.0, abs=1e-12)
    # sigma = 1/sqrt(2) at distance 1 gives k = exp(-1)
    assert cost_rbf([0.0, 1.0], 0, 2, bandwidth=math.sqrt(0.5)) == pytest.approx(1 - math.exp(-1), abs=1e-12)


def test_rbf_median_heuristic_matches_oracle():
    values = [0.1, 0.5, 0.2, 2.0, 1.7]
    c = CostRbf().fit(values)
    assert c.gamma == pytest.approx(rbf_gamma(values))
    assert c.error(1, 4) == pytest.approx(rbf_cost(values, 1, 4, rbf_gamma(values)))


def test_rbf_constant_signal_falls_back():
    with pytest.warns(RuntimeWarning):
        c = CostRbf().fit([2.0] * 5)
    assert c.gamma == 1.0


@pytest.mark.parametrize("signal, expected", [([0, 1, 2, 3], 0.0), ([0, 1, 0], 2 / 3), ([4, 4, 4], 0.0)])
def test_cost_linear(signal, expected):
    assert cost_linear(signal, 0, len(signal)) == pytest.approx(expected, abs=1e-12)


def test_cost_linear_short_interval():
    with pytest.raises(IntervalError):
        cost_linear([0, 1, 2], 1, 2)


def test_cost_cosine():
    assert cost_cosine([[1.0, 0.0], [0.0, 1.0]], 0, 2) == pytest.approx(1.0)
    assert cost_cosine([[1.0, 2.0], [2.0, 4.0]], 0, 2) == pytest.approx(0.0, abs=1e-12)
    assert cost_cosine([[1.0, 2.0], [3.0, 0.5]], 0, 1) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("a, b", [(2, 2), (3, 1), (-1, 2), (0, 9)])
def test_interval_errors(a, b):
    with pytest.raises(IntervalError):
        cost_l2([1, 2, 3], a, b)


def test_unknown_cost():
    with pytest.raises(ConfigError):
        get_cost("manhattan")


def test_detector_examples():
    assert detect_pelt(STEP, "l2", penalty=1.0) == [3, 6]
    assert detect_kernelcpd(STEP, "rbf", n_bkps=1) == [3, 6]
    assert detect_binseg(STEP, "l2", n_bkps=1) == [3, 6]
    assert detect_binseg(TWO_JUMPS, "l2", n_bkps=2) == [4, 8, 12]
    assert detect_bottomup(TWO_JUMPS, "l2", n_bkps=2) == [4, 8, 12]
    assert detect_bottomup([0, 0, 5, 5], "l2", n_bkps=1) == [2, 4]


@pytest.mark.parametrize("method", ["pelt", "kernelcpd", "binseg", "bottomup"])
def test_constant_signal_has_no_change(method):
    with pytest.warns(RuntimeWarning):
        assert detect([1.0] * 10, method, "rbf", penalty=0.5) == [10]
    assert detect([1.0] * 10, method, LINEAR[method], penalty=0.5) == [10]


def test_huge_penalty_gives_no_change():
    assert detect_pelt([0, 9, 1, 8, 2, 7], "l2", penalty=1e12) == [6]


@pytest.mark.filterwarnings("ignore:median pairwise distance")
@pytest.mark.parametrize("fn", [detect_kernelcpd, detect_binseg, detect_bottomup])
def test_zero_breakpoints(fn):
    assert fn(TWO_JUMPS, n_bkps=0) == [12]


def test_infeasible_n_bkps():
    with pytest.raises(ConfigError):
        detect_kernelcpd(STEP, n_bkps=3)


def test_signal_too_short():
    with pytest.raises(SignalTooShortError):
        detect_pelt([1.0, 2.0, 3.0], "l2", penalty=1.0)


def test_pelt_rejects_n_bkps():
    with pytest.raises(ConfigError):
        detect(STEP, "pelt", n_bkps=1)


def test_plateaus_with_noise_kernelcpd_matches_oracle():
    rng = random.Random(3)
    values = [rng.gauss(0, 0.05) for _ in range(5)] + [rng.gauss(1, 0.05) for _ in range(6)]
    gamma = rbf_gamma(values)
    _, expected = brute_force_fixed_k(values, 1, lambda a, b: rbf_cost(values, a, b, gamma))
    assert detect_kernelcpd(values, "rbf", n_bkps=1) == expected == [5, 11]


signals = st.lists(st.floats(-10, 10, allow_nan=False).map(lambda x: round(x, 3)), min_size=4, max_size=10)


@settings(max_examples=100, deadline=None)
@given(signals, st.floats(0.01, 20), st.sampled_from([1, 2, 3]))
def test_pelt_is_exact(values, penalty, min_size):
    if len(values) < 2 * min_size:
        return
    obj, _ = brute_force_penalized(values, penalty, min_size)
    got = detect_pelt(values, "l2", penalty=penalty, min_size=min_size)
    got_obj = CostL2().fit(values).sum_of_costs(got) + penalty * (len(got) - 1)
    assert got_obj == pytest.approx(obj, rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(signals, st.sampled_from(["pelt", "kernelcpd", "binseg", "bottomup"]), st.sampled_from([1, 2, 3]))
def test_breakpoints_well_formed(values, method, min_size):
    if len(values) < 2 * min_size:
        return
    bkps = detect(values, method, LINEAR[method], penalty=1.0, min_size=min_size)
    assert bkps[-1] == len(values)
    starts = [0] + bkps[:-1]
    assert all(e - s >= min_size for s, e in zip(starts, bkps))


@pytest.mark.filterwarnings("ignore:median pairwise distance")
@settings(max_examples=40, deadline=None)
@given(signals, st.floats(-100, 100), st.sampled_from(["l2", "rbf"]))
def test_translation_invariance(values, shift, cost):
    if len(set(values)) < 2:
        return
    shifted = [v + shift for v in values]
    pen = 1.0
    assert detect_pelt(values, cost, penalty=pen) == detect_pelt(shifted, cost, penalty=pen)


def test_determinism_and_ties():
    # symmetric signal: splits at 2 and 4 tie for a single change point
    values = [0, 0, 1, 1, 0, 0]
    first = detect_kernelcpd(values, "linear", n_bkps=1)
    assert first == detect_kernelcpd(values, "linear", n_bkps=1)
    assert detect_binseg(values, "l2", n_bkps=1) == [2, 6]


def test_default_penalty_recovers_clear_step():
    rng = np.random.default_rng(0)
    values = np.r_[np.zeros(10), np.full(11, 5.0)] + rng.normal(0, 0.5, 21)
    assert detect_pelt(values, "rbf") == [10, 21]
    assert detect_pelt(values, "l2") == [10, 21]
