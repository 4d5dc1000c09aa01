"""
Counter-based random streams.

Every path owns a Philox generator keyed by (master seed, stream tag, path
index), so the draws a path sees never depend on how paths are grouped into
chunks or spread over workers.
"""

import numpy as np

# Stream tags keep unrelated experiments from sharing draws under one seed
GRAPH_STREAM = 0
CHART_STREAM = 1
REDUCED_STREAM = 2
BESSEL_STREAM = 3
CALIBRATION_STREAM = 4
BOOTSTRAP_STREAM = 5


def path_generator(seed, index, stream=GRAPH_STREAM):
    """
    Build the generator of one path

    Args:
        seed (int): Master seed of the run
        index (int): Path index
        stream (int): Stream tag of the experiment family

    Returns:
        numpy.random.Generator: Philox-backed generator
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.Philox(sequence))


def chunk_generators(seed, indices, stream=GRAPH_STREAM):
    """Generators for a contiguous chunk of path indices"""
    return [path_generator(seed, index, stream) for index in indices]


def block_normals(generators, active, block, width):
    """
    Draw the next block of standard normals for the active paths

    Args:
        generators (list): One generator per path of the chunk
        active (ndarray): Indices (into generators) of paths still running
        block (int): Number of steps in the block
        width (int): Normals per step

    Returns:
        ndarray: Array of shape (block, len(active), width)
    """
    out = np.empty((block, len(active), width))
    for column, path in enumerate(active):
        out[:, column, :] = generators[path].standard_normal((block, width))
    return out
