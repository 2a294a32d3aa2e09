"""Deterministic chunked fan-out for trajectory ensembles.

Trajectories are partitioned into fixed-size chunks; each chunk is
processed as one vectorised unit by a single worker, so the numerical
result of a chunk does not depend on how many workers are running.
Results are reassembled in chunk order.
"""

from concurrent.futures import ProcessPoolExecutor


def chunk_bounds(n_items: int, chunk_size: int):
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    return [(lo, min(lo + chunk_size, n_items)) for lo in range(0, n_items, chunk_size)]


def chunked_map(worker, jobs, n_workers: int = 1):
    """Apply worker to each job tuple; returns results in job order.

    n_workers <= 1 runs inline.  worker must be a module-level function
    and jobs picklable when n_workers > 1.
    """
    if n_workers <= 1 or len(jobs) <= 1:
        return [worker(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(n_workers, len(jobs))) as pool:
        return list(pool.map(worker, jobs))
