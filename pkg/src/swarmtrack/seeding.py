"""Deterministic RNG stream derivation.

Every random draw in a trial comes from a stream derived as
``(master, trial, epoch, robot, purpose)``; no two purposes share a
stream, so adding draws to one subsystem never perturbs another.
"""

import numpy as np

# purpose tags (kept stable; serialized seeds reference them implicitly)
TARGET_MOTION = 1
SENSING = 2
OBJECTIVE = 3
MCTS = 4
RANDOM_ACTION = 5
RSP_ROUNDS = 6
INIT_STATE = 7
METRIC_EVAL = 8
CAPACITY = 9
REFERENCE = 10


def seed_sequence(*parts) -> np.random.SeedSequence:
    """Build a SeedSequence from non-negative integer parts."""
    key = [int(p) & 0xFFFFFFFF for p in parts]
    return np.random.SeedSequence(key)


def generator(*parts) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(*parts))


def stream_seed(*parts) -> int:
    """Collapse a part tuple into a single integer seed (for contexts that
    re-derive their own sub-streams)."""
    return int(seed_sequence(*parts).generate_state(1, np.uint64)[0])
