"""Pure-Python kernel backend.

These functions mirror dcgeval.kernels._core exactly. Both backends perform
the same IEEE-754 double operations in the same order (sequential
left-to-right accumulation within a trajectory, elementwise ops otherwise),
so their outputs are bit-identical; tests assert that. Randomness never
enters a kernel: callers pre-draw uniforms/noise with a seeded generator.
"""

from __future__ import annotations

import numpy as np


def sample_logged_items(ranked, ctx_idx, quality, pbm_probs, view_u, reward_vals, binary):
    """Turn displayed slates plus pre-drawn randomness into logged items.

    ranked : (n, L) int64 action indices by display rank.
    ctx_idx : (n,) int64 context index per trajectory.
    quality : (C, A) float64 expected reward per (context, action).
    pbm_probs : (L,) float64 view probability at each display rank.
    view_u : (n, L) float64 uniforms deciding views (u < prob means viewed).
    reward_vals : (n, L) float64 uniforms (binary) or noise factors (real).
    binary : reward is 1.0 if reward_vals < quality, else quality * noise.

    Returns (counts, actions, ranks, props, rewards): per-trajectory item
    counts plus flattened per-item arrays in trajectory-then-rank order.
    """
    viewed = view_u < pbm_probs[None, :]
    q = quality[ctx_idx[:, None], ranked]
    if binary:
        rewards_mat = (reward_vals < q).astype(np.float64)
    else:
        rewards_mat = q * reward_vals
    counts = viewed.sum(axis=1, dtype=np.int64)
    rows, cols = np.nonzero(viewed)
    actions = ranked[rows, cols].astype(np.int64, copy=False)
    ranks = (cols + 1).astype(np.int64, copy=False)
    props = pbm_probs[cols]
    rewards = rewards_mat[rows, cols]
    return counts, actions, ranks, props, rewards


def dcg_values(offsets, labels, disc):
    """Per-trajectory sums of labels[t] * disc[t].

    offsets : (n+1,) int64 prefix offsets delimiting each trajectory's items.
    labels, disc : (m,) float64 per-item label and per-item discount.
    """
    n = len(offsets) - 1
    out = np.zeros(n, dtype=np.float64)
    labels_list = labels.tolist()
    disc_list = disc.tolist()
    offs = offsets.tolist()
    for i in range(n):
        acc = 0.0
        for t in range(offs[i], offs[i + 1]):
            acc += labels_list[t] * disc_list[t]
        out[i] = acc
    return out


def ideal_dcg_values(offsets, labels, disc_by_pos):
    """Per-trajectory best-case sums: labels sorted descending, dotted with
    disc_by_pos[0], disc_by_pos[1], ...

    disc_by_pos must be at least as long as the largest trajectory.
    """
    n = len(offsets) - 1
    out = np.zeros(n, dtype=np.float64)
    labels_list = labels.tolist()
    disc_list = disc_by_pos.tolist()
    offs = offsets.tolist()
    for i in range(n):
        segment = sorted(labels_list[offs[i]:offs[i + 1]], reverse=True)
        acc = 0.0
        for j, lab in enumerate(segment):
            acc += lab * disc_list[j]
        out[i] = acc
    return out
