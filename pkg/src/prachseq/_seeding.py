import zlib

import numpy as np


def tag_key(tag):
    return zlib.crc32(str(tag).encode("utf-8"))


def trial_rng(master_seed, tag, index):
    """Generator for one Monte Carlo trial, keyed by (seed, tag, trial index).

    Independent of how trials are batched or distributed across workers.
    """
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), tag_key(tag), int(index)]))


def chunk_ranges(n, size):
    return [(start, min(start + size, n)) for start in range(0, n, size)]
