import math
import random

import numpy as np
import pytest

from ipiagent.errors import ConfigError, TraceParseError, ValidationError
from ipiagent.gating import (
    GateState,
    GateThresholds,
    ProposalSet,
    SyntheticTrace,
    gate,
    load_synthetic_trace,
    sweep,
    update_delta,
)

THRESHOLDS = GateThresholds(theta_low=0.10, theta_high=0.30)


def unit_rows(rows):
    arr = np.asarray(rows, dtype=np.float64)
    return arr / np.linalg.norm(arr, axis=1, keepdims=True)


def test_thresholds_validation():
    with pytest.raises(ValidationError):
        GateThresholds(theta_low=0.5, theta_high=0.1)
    unbounded = GateThresholds.unbounded()
    assert math.isinf(unbounded.theta_low) and unbounded.theta_low < 0
    assert math.isinf(unbounded.theta_high)


def test_gate_spec_cases():
    assert gate(1, 0.05, THRESHOLDS).final == 0
    assert gate(1, 0.05, THRESHOLDS).reason == "suppressed"
    forced = gate(0, 0.40, THRESHOLDS)
    assert (forced.final, forced.reason) == (1, "forced")
    neither = gate(0, 0.20, THRESHOLDS)
    assert (neither.final, neither.reason) == (0, "unchanged")


def test_gate_first_tick_pass_through():
    for raw in (0, 1):
        decision = gate(raw, None, THRESHOLDS)
        assert decision.final == raw
        assert decision.reason == "pass_through"
        assert decision.delta is None


def test_gate_boundary_equalities_leave_raw_unchanged():
    assert gate(1, THRESHOLDS.theta_low, THRESHOLDS).final == 1
    assert gate(0, THRESHOLDS.theta_high, THRESHOLDS).final == 0


def test_gate_totality_over_random_inputs():
    rng = random.Random(5)
    for _ in range(500):
        raw = rng.randint(0, 1)
        delta = None if rng.random() < 0.2 else rng.uniform(-1, 1)
        low = rng.uniform(-0.5, 0.5)
        high = low + rng.uniform(0, 0.5)
        decision = gate(raw, delta, GateThresholds(low, high))
        assert decision.final in (0, 1)
        # decision invariants from the rule definition
        if decision.reason == "suppressed":
            assert raw == 1 and decision.final == 0
        if decision.reason == "forced":
            assert raw == 0 and decision.final == 1
        if decision.reason == "pass_through":
            assert delta is None and decision.final == raw


def test_gate_identity_limit():
    unbounded = GateThresholds.unbounded()
    rng = random.Random(9)
    for _ in range(200):
        raw = rng.randint(0, 1)
        delta = rng.uniform(-2, 2)
        assert gate(raw, delta, unbounded).final == raw


def test_proposal_set_validation():
    with pytest.raises(ValidationError):
        ProposalSet("t", 1, (), np.zeros((0, 3)))
    with pytest.raises(ValidationError):
        ProposalSet("t", 1, ("a",), np.array([[1.0, 1.0, 0.0]]))  # not unit
    ok = ProposalSet("t", 1, ("a", "b"), unit_rows([[1, 0, 0], [0, 1, 0]]))
    assert ok.count == 2


def test_update_delta_spec_example():
    embeddings = unit_rows([[1, 0, 0], [0, 1, 0]])
    ps = ProposalSet("task-001", 1, ("a", "b"), embeddings)
    state = GateState("task-001", 1,
                      prev_scores=np.array([0.30, 0.50]), last_tick=4)
    # scores at t: (0.40, 0.20) -> per-proposal deltas (0.10, -0.30)
    v = np.array([0.40, 0.20, math.sqrt(1 - 0.40**2 - 0.20**2)])
    delta, new_state = update_delta(state, ps, v, tick=5)
    assert delta == pytest.approx(0.10, abs=1e-12)
    assert new_state.prev_scores == pytest.approx([0.40, 0.20])


def test_update_delta_first_observation_and_revision_reset():
    embeddings = unit_rows([[1, 0, 0], [0, 1, 0]])
    ps = ProposalSet("task-001", 1, ("a", "b"), embeddings)
    v = unit_rows([[0.4, 0.3, 0.5]])[0]
    delta, state = update_delta(GateState("task-001", 1), ps, v, tick=3)
    assert delta is None
    # same revision, second observation: defined
    delta, state = update_delta(state, ps, v, tick=4)
    assert delta == pytest.approx(0.0, abs=1e-12)
    # revision bump resets the history: no delta across the boundary
    ps2 = ProposalSet("task-001", 2, ("c",), unit_rows([[0, 0, 1]]))
    delta, state = update_delta(state, ps2, v, tick=5)
    assert delta is None
    assert state.revision == 2


def test_update_delta_dimension_mismatch():
    ps = ProposalSet("t", 1, ("a",), unit_rows([[1, 0, 0]]))
    with pytest.raises(ConfigError):
        update_delta(GateState("t", 1), ps, np.array([1.0, 0.0]), tick=1)


def test_max_pool_dominance_against_brute_force():
    # delta() result equals an independent recomputation over all proposals
    rng = np.random.default_rng(31)
    for _ in range(100):
        n_props = int(rng.integers(1, 9))
        dim = int(rng.integers(2, 12))
        embeddings = unit_rows(rng.normal(size=(n_props, dim)))
        ps = ProposalSet("t", 1, tuple("p" * (i + 1) for i in range(n_props)),
                         embeddings)
        v_prev = unit_rows(rng.normal(size=(1, dim)))[0]
        v_now = unit_rows(rng.normal(size=(1, dim)))[0]
        _, state = update_delta(GateState("t", 1), ps, v_prev, tick=1)
        delta, _ = update_delta(state, ps, v_now, tick=2)
        per_proposal = [float(embeddings[m] @ v_now - embeddings[m] @ v_prev)
                        for m in range(n_props)]
        assert delta == pytest.approx(max(per_proposal), abs=1e-9)
        for d in per_proposal:
            assert delta >= d - 1e-12


def make_trace(raw, scores, truth, start=1):
    return SyntheticTrace(name="t", scores=np.asarray(scores, dtype=float),
                          raw=np.asarray(raw, dtype=np.uint8),
                          truth_ticks=[truth], start_tick=start)


def test_sweep_single_pair():
    scores = [[0.2, 0.1]] * 10
    raw = [0] * 10
    raw[4] = 1
    rows = sweep([make_trace(raw, scores, truth=5)],
                 [GateThresholds(-1.0, 1.0)])
    assert len(rows) == 1
    assert rows[0].correct == 1


def test_sweep_identity_limit_matches_raw_rates():
    scores = [[0.2, 0.1]] * 12
    raw = [0] * 12
    raw[7] = 1  # fires at tick 8
    rows = sweep([make_trace(raw, scores, truth=8)],
                 [GateThresholds.unbounded()])
    assert rows[0].suppressed == 0
    assert rows[0].forced == 0
    assert rows[0].correct == 1


def test_sweep_suppression_monotonicity():
    # raising theta_low never decreases the suppression count
    rng = np.random.default_rng(41)
    scores = np.cumsum(rng.uniform(-0.05, 0.05, size=(30, 2)), axis=0) + 0.3
    raw = rng.integers(0, 2, size=30)
    trace = make_trace(raw, scores, truth=15)
    lows = [-0.5, -0.1, 0.0, 0.02, 0.05, 0.5]
    rows = sweep([trace], [GateThresholds(low, 1.0) for low in lows])
    counts = [r.suppressed for r in rows]
    assert counts == sorted(counts)
    # and forcing grows as theta_high falls
    highs = [0.5, 0.05, 0.02, 0.0, -0.1][::-1]
    rows = sweep([trace], [GateThresholds(-1.0, h) for h in sorted(highs)])
    forced = [r.forced for r in rows]
    assert forced == sorted(forced, reverse=True)


def test_sweep_empty_grid_rejected():
    trace = make_trace([0, 1], [[0.1], [0.2]], truth=2)
    with pytest.raises(ValidationError):
        sweep([trace], [])


def test_load_synthetic_trace_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{\"version\": 2}")
    with pytest.raises(TraceParseError):
        load_synthetic_trace(path)
