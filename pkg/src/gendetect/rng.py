"""Deterministic random-stream fan-out.

Every random draw in the package comes from a Philox generator keyed by the
experiment seed plus a path of labels, e.g. ``stream_rng(seed, "setup",
"gaussian", sample_index)``.  Streams are independent of each other and of
the order in which they are created, so per-sample work can be parallelised
or reordered without changing any output.
"""

import hashlib

import numpy as np


def _label_entropy(label) -> int:
    """Map a path component to a stable 64-bit integer."""
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError(f"negative stream label: {label}")
        return int(label)
    digest = hashlib.blake2s(str(label).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream_rng(seed: int, *path) -> np.random.Generator:
    """Return the generator for ``(seed, *path)``.

    The same arguments always yield the same stream; distinct paths yield
    statistically independent streams.
    """
    seq = np.random.SeedSequence(
        entropy=int(seed), spawn_key=tuple(_label_entropy(p) for p in path)
    )
    return np.random.Generator(np.random.Philox(seq))
