"""Named random substreams derived from one root seed."""

import zlib

import numpy as np

# Fixed stream ids: adding a stream must not shift existing ones.
STREAMS = {
    'init': 0,
    'shuffle': 1,
    'cff': 2,
    'data': 3,
}


def substream(seed: int, name: str, *path: str) -> np.random.Generator:
    """Independent generator for one concern (init, shuffle, cff, data).

    Optional path components give every model component its own child stream,
    so dropping one component leaves the initial weights of the others unchanged.
    """
    if name not in STREAMS:
        raise KeyError(f"unknown random stream {name!r}")
    key = (STREAMS[name],) + tuple(zlib.crc32(part.encode('utf-8')) for part in path)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))
