"""Adaptive random seed generation.

Keeps the encoded vectors of every executed seed and, from a small batch of
random candidates, picks the one whose minimum Euclidean distance to all
executed seeds is largest.  With nothing executed yet, any candidate is
equally diverse, so one is drawn uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hazardseed.map_model import RoadNetwork
from hazardseed.scenario import Chromosome, encode, random_chromosome

DEFAULT_CANDIDATES = 10


@dataclass
class SeedPool:
    """Memory of executed seeds (normalized encodings) plus the candidate count."""

    candidate_count: int = DEFAULT_CANDIDATES
    executed: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.candidate_count < 1:
            raise ValueError("candidate_count must be >= 1")

    def executed_matrix(self) -> np.ndarray:
        if not self.executed:
            return np.empty((0, 0))
        return np.stack(self.executed)


def generate_candidates(network: RoadNetwork, object_count: int, k: int,
                        rng: np.random.Generator, kind_mix=None) -> list[Chromosome]:
    """k independent random chromosomes."""
    if k < 1:
        raise ValueError("k must be >= 1")
    kwargs = {} if kind_mix is None else {"kind_mix": kind_mix}
    return [random_chromosome(network, object_count, rng, **kwargs) for _ in range(k)]


def select_next(candidates: list[Chromosome], pool: SeedPool,
                network: RoadNetwork,
                rng: np.random.Generator | None = None) -> tuple[Chromosome, int]:
    """The candidate maximizing the minimum distance to all executed seeds.

    Ties break toward the lowest candidate index.  With an empty executed
    set the choice is uniformly random (rng required then).
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    if not pool.executed:
        if rng is None:
            idx = 0
        else:
            idx = int(rng.integers(len(candidates)))
        return candidates[idx], idx
    executed = pool.executed_matrix()
    vecs = np.stack([encode(c, network) for c in candidates])
    if vecs.shape[1] != executed.shape[1]:
        raise ValueError("candidate encoding dimension differs from executed seeds")
    # pairwise (k, n) distances, then min over executed, argmax over candidates
    dists = np.linalg.norm(vecs[:, None, :] - executed[None, :, :], axis=2)
    min_d = dists.min(axis=1)
    idx = int(np.argmax(min_d))   # argmax returns the first (lowest) index on ties
    return candidates[idx], idx


def record_executed(pool: SeedPool, seed: Chromosome,
                    network: RoadNetwork) -> SeedPool:
    """Append the encoding of the seed that was actually executed."""
    vec = encode(seed, network)
    if pool.executed and len(vec) != len(pool.executed[0]):
        raise ValueError("seed encoding dimension differs from pool")
    pool.executed.append(vec)
    return pool
