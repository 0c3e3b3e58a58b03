"""The compiled kernels and the NumPy fallback must agree bit-for-bit, and
both must match a straight-line Python re-derivation of the rules."""

import math

import numpy as np
import pytest

from ipiagent._kernels import (
    REASON_FORCED,
    REASON_PASS_THROUGH,
    REASON_SUPPRESSED,
    REASON_UNCHANGED,
    _pure,
)

try:
    from ipiagent._kernels import _native
    IMPLS = [("pure", _pure), ("native", _native)]
except ImportError:  # pure-only build
    IMPLS = [("pure", _pure)]


def brute_force_delta(scores):
    """Loop-over-everything reference for the pooled per-tick change."""
    n_ticks, n_props = scores.shape
    delta = [0.0] * n_ticks
    defined = [0] * n_ticks
    for t in range(1, n_ticks):
        best = -math.inf
        for m in range(n_props):
            best = max(best, scores[t][m] - scores[t - 1][m])
        delta[t] = best
        defined[t] = 1
    return delta, defined


def scalar_gate(raw, delta, defined, low, high):
    if not defined:
        return raw, REASON_PASS_THROUGH
    if raw == 1 and delta < low:
        return 0, REASON_SUPPRESSED
    if raw == 0 and delta > high:
        return 1, REASON_FORCED
    return raw, REASON_UNCHANGED


@pytest.mark.parametrize("name,impl", IMPLS)
def test_max_pool_delta_matches_brute_force(name, impl):
    rng = np.random.default_rng(7)
    for _ in range(50):
        n_ticks = int(rng.integers(1, 30))
        n_props = int(rng.integers(1, 9))
        scores = rng.uniform(-1, 1, size=(n_ticks, n_props))
        delta, defined = impl.max_pool_delta(scores)
        ref_delta, ref_defined = brute_force_delta(scores)
        assert list(defined) == ref_defined
        for t in range(1, n_ticks):
            assert delta[t] == pytest.approx(ref_delta[t], abs=1e-12)


@pytest.mark.parametrize("name,impl", IMPLS)
def test_gate_series_matches_scalar_rule(name, impl):
    rng = np.random.default_rng(11)
    for _ in range(30):
        n_ticks = int(rng.integers(1, 50))
        raw = rng.integers(0, 2, size=n_ticks).astype(np.uint8)
        delta = rng.uniform(-0.2, 0.2, size=n_ticks)
        defined = rng.integers(0, 2, size=n_ticks).astype(np.uint8)
        low, high = sorted(rng.uniform(-0.1, 0.1, size=2))
        final, reason = impl.gate_series(raw, delta, defined, low, high)
        for t in range(n_ticks):
            want_final, want_reason = scalar_gate(
                int(raw[t]), float(delta[t]), int(defined[t]), low, high)
            assert int(final[t]) == want_final
            assert int(reason[t]) == want_reason


@pytest.mark.parametrize("name,impl", IMPLS)
def test_sweep_grid_matches_scalar_scan(name, impl):
    rng = np.random.default_rng(13)
    n_ticks = 60
    raw = rng.integers(0, 2, size=n_ticks).astype(np.uint8)
    delta = rng.uniform(-0.1, 0.1, size=n_ticks)
    defined = np.ones(n_ticks, dtype=np.uint8)
    defined[0] = 0
    lows = np.array([-0.05, 0.0, 0.02, 0.05])
    highs = np.array([0.0, 0.04, 0.06, 0.2])
    first, suppressed, forced = impl.sweep_grid(raw, delta, defined, lows, highs)
    for g in range(len(lows)):
        want_first, want_sup, want_for = -1, 0, 0
        for t in range(n_ticks):
            final, reason = scalar_gate(int(raw[t]), float(delta[t]),
                                        int(defined[t]), lows[g], highs[g])
            if final and want_first < 0:
                want_first = t
            want_sup += reason == REASON_SUPPRESSED
            want_for += reason == REASON_FORCED
        assert int(first[g]) == want_first
        assert int(suppressed[g]) == want_sup
        assert int(forced[g]) == want_for


@pytest.mark.skipif(len(IMPLS) < 2, reason="native kernels not built")
def test_native_and_pure_agree_exactly():
    rng = np.random.default_rng(17)
    for _ in range(20):
        n_ticks = int(rng.integers(2, 40))
        scores = rng.uniform(-1, 1, size=(n_ticks, int(rng.integers(1, 6))))
        d_pure, ok_pure = _pure.max_pool_delta(scores)
        d_nat, ok_nat = _native.max_pool_delta(scores)
        assert np.array_equal(d_pure, d_nat)
        assert np.array_equal(ok_pure, ok_nat)

        raw = rng.integers(0, 2, size=n_ticks).astype(np.uint8)
        lows = rng.uniform(-0.1, 0.05, size=5)
        highs = lows + rng.uniform(0, 0.1, size=5)
        out_pure = _pure.sweep_grid(raw, d_pure, ok_pure, lows, highs)
        out_nat = _native.sweep_grid(raw, d_nat, ok_nat, lows, highs)
        for a, b in zip(out_pure, out_nat):
            assert np.array_equal(a, b)
