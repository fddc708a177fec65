"""Counter-based RNG substreams for reproducible (parallelizable) sampling.

Every random draw in the package comes from a Philox stream derived from
(master_seed, path). Distinct paths give statistically independent streams,
so results are identical whether work is scheduled serially or in parallel.
"""

import numpy as np

# Stream namespace tags, one per consumer. Keeping them disjoint guarantees
# e.g. the k-means restarts never share a stream with trajectory sampling.
TAG_KMEANS = 1
TAG_TRAJECTORY = 2
TAG_BAGGING = 3
TAG_SYNTHETIC = 4


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Return an independent Generator for (master_seed, *path).

    Path elements must be non-negative integers; the same (seed, path)
    always yields the same stream.
    """
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(seq))
