"""Platform-stable random streams.

Every random draw in the package goes through a Philox4x64 counter-based
generator. Uniforms come from its 53-bit doubles; normals are produced here
with the Box-Muller transform so the variates do not depend on numpy's
ziggurat tables. Seeds for independent sub-streams are derived with
``numpy.random.SeedSequence`` spawn keys, which hash ``(entropy, key...)``
identically on every platform.
"""

from __future__ import annotations

import numpy as np

# spawn-key tags naming the independent streams of one sampled instance
STREAM_GRAPH = 0
STREAM_WEIGHTS = 1
STREAM_PARAMS = 2


def derive_seed(base_seed: int, *key: int) -> int:
    """Deterministic 64-bit seed for the stream addressed by ``key``."""
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.random(size)


def normals(rng: np.random.Generator, size: int, mean: float = 0.0, sd: float = 1.0) -> np.ndarray:
    """Box-Muller normal variates (both branches used, so ceil(size/2) pairs)."""
    pairs = (size + 1) // 2
    u = rng.random((pairs, 2))
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))  # 1 - u in (0, 1]
    angle = 2.0 * np.pi * u[:, 1]
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return mean + sd * z[:size]
