"""Seeded random streams.

Every random draw in the package goes through :func:`stream`, which derives an
independent ``numpy.random.PCG64`` generator from a run seed and a stream name
("plan", "noise", "test-masks", "cv-folds", ...). PCG64 output is stable across
platforms for a given numpy major version, which is what makes serialized plans
reproducible.
"""

from __future__ import annotations

import zlib

import numpy as np

RNG_NAME = "numpy.PCG64"


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Generator for the named substream of ``seed``.

    ``extra`` integers are mixed into the spawn key, e.g. a subsampler index.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(_name_key(name), *map(int, extra)))
    return np.random.Generator(np.random.PCG64(ss))
