"""Pure NumPy implementations of the gating hot loops.

These are the reference semantics for ipiagent._kernels._native and the
fallback used when the compiled extension is unavailable. The scalar gate
rule itself lives in ipiagent.gating.gate; these kernels exist for the batch
paths (whole-trace gating and threshold-grid sweeps) where Python-level
loops dominate runtime.
"""

import numpy as np

REASON_UNCHANGED = 0
REASON_PASS_THROUGH = 1
REASON_SUPPRESSED = 2
REASON_FORCED = 3


def max_pool_delta(scores):
    """Per-tick pooled similarity change for one task.

    scores: (T, M) float64, row t holds the M per-proposal similarities at
    tick t. Returns (delta, defined): delta[t] = max_m(scores[t] -
    scores[t-1]), defined[0] = 0 because there is no previous row.
    """
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[1] < 1:
        raise ValueError("scores must be a (T, M) matrix with M >= 1")
    n_ticks = scores.shape[0]
    delta = np.zeros(n_ticks, dtype=np.float64)
    defined = np.zeros(n_ticks, dtype=np.uint8)
    if n_ticks > 1:
        delta[1:] = np.max(scores[1:] - scores[:-1], axis=1)
        defined[1:] = 1
    return delta, defined


def gate_series(raw, delta, defined, theta_low, theta_high):
    """Apply the dual-threshold gate across a tick series.

    raw: (T,) 0/1 raw trigger decisions; delta/defined from max_pool_delta.
    Returns (final, reason) arrays. Boundary semantics: a defined delta
    suppresses raw=1 only when delta < theta_low and forces raw=0 only when
    delta > theta_high; equality leaves the raw decision unchanged.
    """
    raw = np.ascontiguousarray(raw, dtype=np.uint8)
    delta = np.ascontiguousarray(delta, dtype=np.float64)
    defined = np.ascontiguousarray(defined, dtype=np.uint8)
    n_ticks = raw.shape[0]
    final = raw.copy()
    reason = np.full(n_ticks, REASON_UNCHANGED, dtype=np.uint8)

    undefined = defined == 0
    reason[undefined] = REASON_PASS_THROUGH
    suppress = ~undefined & (raw == 1) & (delta < theta_low)
    final[suppress] = 0
    reason[suppress] = REASON_SUPPRESSED
    force = ~undefined & (raw == 0) & (delta > theta_high)
    final[force] = 1
    reason[force] = REASON_FORCED
    return final, reason


def sweep_grid(raw, delta, defined, theta_lows, theta_highs):
    """Evaluate the gate for every threshold pair over one trace.

    theta_lows/theta_highs: (G,) parallel arrays of threshold pairs.
    Returns (first_trigger, suppressed, forced): for each grid point the
    index of the first final=1 tick (-1 if none) and the total suppressed /
    forced tick counts.
    """
    raw = np.ascontiguousarray(raw, dtype=np.uint8)
    delta = np.ascontiguousarray(delta, dtype=np.float64)
    defined = np.ascontiguousarray(defined, dtype=np.uint8)
    theta_lows = np.ascontiguousarray(theta_lows, dtype=np.float64)
    theta_highs = np.ascontiguousarray(theta_highs, dtype=np.float64)
    n_grid = theta_lows.shape[0]

    first_trigger = np.full(n_grid, -1, dtype=np.int64)
    suppressed = np.zeros(n_grid, dtype=np.int64)
    forced = np.zeros(n_grid, dtype=np.int64)
    for g in range(n_grid):
        final, reason = gate_series(raw, delta, defined,
                                    theta_lows[g], theta_highs[g])
        hits = np.flatnonzero(final)
        if hits.size:
            first_trigger[g] = hits[0]
        suppressed[g] = int(np.count_nonzero(reason == REASON_SUPPRESSED))
        forced[g] = int(np.count_nonzero(reason == REASON_FORCED))
    return first_trigger, suppressed, forced
