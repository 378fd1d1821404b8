"""Reproducible random streams.

Replication r of a study seeded with `seed` always draws from the same independent
substream, so results do not depend on how replications are spread over workers.
"""
import numpy as np

_SEED_MASK = 2**64 - 1


def replication_stream(seed: int, replication: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(replication,)))


def root_stream(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed))


def new_seed() -> int:
    """Fresh 64-bit seed from OS entropy; callers print it so the run can be repeated."""
    entropy = np.random.SeedSequence().entropy
    return int(entropy) & _SEED_MASK
