"""Deterministic random-stream derivation.

Every stochastic element of the pipeline draws from a stream derived from a
single master seed through (tag, index...) spawn keys, so results are
bit-reproducible and independent of scheduling or worker count.
"""

from __future__ import annotations

import numpy as np

# Stream tags. Values are arbitrary but frozen: changing them changes results.
STREAM_NOISE = 1       # per-block integrator noise
STREAM_SOURCE = 2      # per-block source-mode initial pairs
STREAM_RESERVOIR = 3   # coupling / detuning / input-weight draws
STREAM_DATASET = 4     # dataset parameter draws
STREAM_SPLIT = 5       # train/test permutations
STREAM_READOUT = 6     # network initialization
STREAM_REPEAT = 7      # per-repeat master seeds
STREAM_SAMPLER = 8     # standalone state-sampler streams
STREAM_SAMPLE = 9      # per-sample ensemble seeds within a repeat


def substream(master_seed: int, *key: int) -> np.random.SeedSequence:
    """SeedSequence for stream (master_seed, key...)."""
    return np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))


def generator(master_seed: int, *key: int) -> np.random.Generator:
    """Philox-backed generator for a derived stream (counter-based, splittable)."""
    return np.random.Generator(np.random.Philox(substream(master_seed, *key)))


def derive_seed(master_seed: int, *key: int) -> int:
    """Collapse a derived stream to a single 63-bit integer seed."""
    return int(substream(master_seed, *key).generate_state(1, np.uint64)[0] >> np.uint64(1))
