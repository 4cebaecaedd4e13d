"""Counter-based random streams derived from one root seed."""
import numpy as np


def derive_stream(seed: int, *key: int) -> np.random.Generator:
    """
    Independent generator for one task.

    Streams for distinct keys never overlap, so tasks can run in any order or
    process and still reproduce the same draws.

    Args:
        seed: Root seed of the run
        *key: Task coordinates, e.g. (outer, inner) or (replication,)

    Returns:
        np.random.Generator: Philox generator seeded from SeedSequence(seed, spawn_key=key)
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def derive_seed(seed: int, *key: int) -> int:
    """64-bit root seed for a nested run (e.g. the bootstrap of one replication)."""
    state = np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(1, dtype=np.uint64)
    return int(state[0])
