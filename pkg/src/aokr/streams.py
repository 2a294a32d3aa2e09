"""Counter-based random streams for reproducible parallel ensembles.

Every trajectory owns a private Philox stream keyed by
(seed, sweep index) with the (engine, trajectory) pair in the counter
block, so results are independent of worker count, chunking, and sweep
point execution order.
"""

import numpy as np

ENGINE_CLASSICAL = 0
ENGINE_QUANTUM = 1

_MASK64 = (1 << 64) - 1


def trajectory_stream(seed: int, sweep_index: int, engine_id: int, traj_index: int):
    """Independent Generator for one trajectory of one sweep point."""
    key = np.array([seed & _MASK64, sweep_index & _MASK64], dtype=np.uint64)
    counter = np.array([0, engine_id & _MASK64, traj_index & _MASK64, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
