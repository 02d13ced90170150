import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tpekit.bandwidth import (
    BandwidthConfig,
    bw_hyperopt,
    bw_optuna_categorical,
    bw_optuna_numerical,
    bw_scott,
    magic_clip,
    min_bandwidth,
)


def gaps_by_brute_force(points, low, high, endpoints):
    """For each point, the largest distance to its sorted neighbours."""
    pts = sorted(points)
    seq = [low] + pts + [high] if endpoints else pts
    off = 1 if endpoints else 0
    out = []
    for i in range(len(pts)):
        j = i + off
        cands = []
        if j - 1 >= 0:
            cands.append(seq[j] - seq[j - 1])
        if j + 1 < len(seq):
            cands.append(seq[j + 1] - seq[j])
        out.append(max(cands) if cands else 0.0)
    return out


def scott_by_hand(xs):
    xs = list(xs)
    n = len(xs)
    sd = statistics.stdev(xs)
    q = statistics.quantiles(xs, n=4, method="inclusive")  # type-7
    return 1.059 * n ** -0.2 * min(sd, (q[2] - q[0]) / 1.34)


def test_hyperopt_hand_example():
    np.testing.assert_allclose(bw_hyperopt([0.2, 0.5, 0.9], 0, 1), [0.3, 0.4, 0.4])


def test_hyperopt_single_center_with_endpoints():
    np.testing.assert_allclose(bw_hyperopt([0.5], 0, 1, consider_endpoints=True), [0.5])


def test_hyperopt_duplicates_zero_then_clipped():
    b = bw_hyperopt([0.3, 0.3], 0, 1)
    np.testing.assert_array_equal(b, [0.0, 0.0])
    cfg = BandwidthConfig(delta=0.03)
    assert np.all(magic_clip(b, 0, 1, 2, cfg) >= 0.03)


def test_hyperopt_rejects_unsorted():
    with pytest.raises(ValueError):
        bw_hyperopt([0.5, 0.2], 0, 1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.booleans())
def test_hyperopt_matches_brute_force(points, endpoints):
    got = bw_hyperopt(sorted(points), 0.0, 1.0, endpoints)
    np.testing.assert_allclose(got, gaps_by_brute_force(points, 0.0, 1.0, endpoints), atol=1e-15)


def test_scott_equal_centers_zero():
    assert bw_scott([0.4] * 5) == 0.0
    assert bw_scott([0.4]) == 0.0


def test_scott_zero_to_nine():
    xs = np.arange(10.0)
    assert bw_scott(xs) == pytest.approx(scott_by_hand(xs), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=2, max_size=40))
def test_scott_matches_hand_formula(xs):
    assert bw_scott(xs) == pytest.approx(scott_by_hand(xs), abs=1e-9)


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=20), st.floats(0.1, 10))
def test_scott_homogeneous(xs, c):
    assert bw_scott(np.asarray(xs) * c) == pytest.approx(c * bw_scott(xs), rel=1e-9, abs=1e-12)


def test_optuna_numerical():
    assert bw_optuna_numerical(1, 3, 0, 2) == pytest.approx(0.4)
    assert bw_optuna_numerical(32, 1, 0, 1) == pytest.approx(0.1, abs=1e-12)
    seq = [bw_optuna_numerical(n, 4, 0, 1) for n in range(1, 100)]
    assert all(a > b for a, b in zip(seq, seq[1:]))


def test_optuna_categorical():
    assert bw_optuna_categorical(10, 1) == 1.0
    assert bw_optuna_categorical(10, 3) == pytest.approx(1.1 / 1.3, abs=1e-12)
    assert bw_optuna_categorical(10**6, 3) == pytest.approx(1.0, abs=1e-5)
    for n in range(1, 50):
        for c in range(2, 10):
            assert bw_optuna_categorical(n, c) < 1


def test_magic_clip_examples():
    legacy = BandwidthConfig(magic_rule="legacy", delta=0.0)
    assert magic_clip(0.001, 0, 1, 50, legacy) == pytest.approx(0.02)
    off = BandwidthConfig(alpha=math.inf, delta=0.0)
    assert magic_clip(0.001, 0, 1, 50, off) == 0.001
    rec = BandwidthConfig(alpha=2.0, delta=0.03)
    assert min_bandwidth(0, 1, 10, rec) == pytest.approx(0.03)
    assert magic_clip(0.0, 0, 1, 10, rec) == pytest.approx(0.03)


def test_magic_clip_disabled_keeps_delta_floor():
    cfg = BandwidthConfig(consider_magic_clip=False, delta=0.1)
    assert min_bandwidth(0, 2, 3, cfg) == pytest.approx(0.2)


def test_legacy_caps_at_one_hundred():
    cfg = BandwidthConfig(magic_rule="legacy", delta=0.0)
    assert min_bandwidth(0, 1, 1000, cfg) == pytest.approx(0.01)


@settings(max_examples=200, deadline=None)
@given(
    raw=st.floats(0, 10),
    low=st.floats(-10, 10),
    width=st.floats(0.01, 100),
    n=st.integers(1, 500),
    alpha=st.sampled_from([0.25, 0.5, 1.0, 2.0, 4.0, math.inf]),
    delta=st.sampled_from([0.0, 0.01, 0.03, 0.1, 0.3]),
)
def test_magic_clip_floor_and_monotone(raw, low, width, n, alpha, delta):
    cfg = BandwidthConfig(alpha=alpha, delta=delta)
    high = low + width
    floor = max(delta * width, 0.0 if math.isinf(alpha) else width / n**alpha)
    out = magic_clip(raw, low, high, n, cfg)
    assert out == pytest.approx(max(raw, floor), rel=1e-12)
    assert magic_clip(raw + 1.0, low, high, n, cfg) >= out


def test_config_validation():
    with pytest.raises(ValueError):
        BandwidthConfig(heuristic="silverman")
    with pytest.raises(ValueError):
        BandwidthConfig(categorical=1.5)
    with pytest.raises(ValueError):
        BandwidthConfig(alpha=0.0)
    with pytest.raises(ValueError):
        magic_clip(0.1, 0, 1, 0, BandwidthConfig())
