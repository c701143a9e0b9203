"""Deterministic random-stream derivation.

Every source of randomness in a run is a Philox counter-based generator
keyed by an integer path ``(experiment_seed, namespace, *qualifiers)``.
Streams are therefore independent of execution order: client 3's shuffle
in round 7 draws the same numbers whether clients run serially or in
parallel. Bit-level reproducibility is tied to NumPy's Philox bit
generator and its Generator distribution algorithms.
"""

import numpy as np

# Namespace tags keep unrelated streams apart even for equal seeds.
NS_DATA = 1        # synthetic dataset generation
NS_SPLIT = 2       # train/val/test partitioning
NS_MODEL = 3       # global model initialization
NS_POOL = 4        # initial labeled pool selection
NS_TRAIN = 5       # minibatch shuffling during local training
NS_QUERY = 6       # random-strategy query draws


def stream(*path: int) -> np.random.Generator:
    """Return a fresh generator for the given integer key path."""
    if any(p < 0 for p in path):
        path = tuple(p & 0xFFFFFFFFFFFFFFFF for p in path)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(path))))
