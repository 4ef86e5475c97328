"""Shared test oracles.

The stochastic-rewards simulator mirrors the greedy engine run on a converted
immediate-return instance draw for draw: the same keyed uniform that decides
"duration 0 vs never returns" there decides "match fails vs succeeds" here,
so the two availability processes coincide path by path. All trials advance
in lockstep as numpy vectors; the per-unit RNG keys (resource, top rank, use
counter) are reconstructed from death and attempt counters.
"""

import numpy as np

from reuse_alloc import model, rng
from reuse_alloc.distributions import ZeroOrInf


def stochastic_rewards_greedy(instance: model.Instance, p: float, trials: int, master_seed: int):
    """Per-trial successful matches (and attempts) of greedy under the
    stochastic-rewards reading of a converted instance."""
    order = sorted(instance.resources, key=lambda r: (-r.reward, r.id))
    trial_seeds = rng.derive_vec(master_seed, rng.TAG_TRIAL, np.arange(trials))
    caps = {r.id: r.capacity for r in instance.resources}
    dead = {r.id: np.zeros(trials, dtype=np.int64) for r in instance.resources}
    # Attempts at the current top rank since it last changed: with top-rank
    # allocation the engine's use counter for (resource, rank c - dead) is
    # exactly this count + 1.
    streak = {r.id: np.zeros(trials, dtype=np.int64) for r in instance.resources}
    successes = np.zeros(trials)
    attempts = np.zeros(trials)
    for arrival in instance.arrivals:
        edges = arrival.demand.resources
        taken = np.zeros(trials, dtype=bool)
        for r in order:  # greedy order: reward desc, id asc
            if r.id not in edges:
                continue
            here = (~taken) & (dead[r.id] < caps[r.id])
            if not here.any():
                continue
            taken |= here
            rank = caps[r.id] - dead[r.id][here]
            use = streak[r.id][here] + 1
            u = rng.uniform_vec(trial_seeds[here], rng.TAG_DURATION, r.id, rank, use)
            died = u >= 1.0 - p  # the "never returns" branch = success
            idx = np.flatnonzero(here)
            dead[r.id][idx[died]] += 1
            streak[r.id][idx[died]] = 0
            streak[r.id][idx[~died]] += 1
            attempts[idx] += 1
            successes[idx[died]] += 1
    return successes, attempts


def convert_and_check(instance: model.Instance, p: float):
    conv = instance
    for r in conv.resources:
        assert isinstance(r.usage, ZeroOrInf) and abs(r.usage.p - (1.0 - p)) < 1e-12
    return conv
