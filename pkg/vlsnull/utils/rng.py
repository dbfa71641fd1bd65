"""
Named random substreams derived from a single root seed

Every random draw in the package goes through :func:`substream` so that a
simulated point depends only on ``(seed, stage, indices)`` and never on the
order in which points are evaluated.
"""
import hashlib
import logging

import numpy as np

logger = logging.getLogger(__name__)


def stage_key(stage):
    """
    Stable 64-bit integer for a stage name
    """
    digest = hashlib.sha256(str(stage).encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'little')


def substream(seed, stage, *indices):
    """
    Independent generator for one stage of a pipeline

    Parameters
    ----------
    seed : int
        Root seed of the run

    stage : str
        Name of the pipeline stage, e.g. ``'intrap.shots'``

    indices : int
        Integer coordinates of the point inside the stage

    Returns
    -------
    rng : numpy.random.Generator
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, stage_key(stage)]
    for idx in indices:
        idx = int(idx)
        if idx < 0:
            raise ValueError("Substream indices must be non-negative")
        entropy.append(idx)
    logger.debug("Creating substream %s%s for seed %s", stage, indices, seed)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
