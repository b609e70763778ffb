"""
Classical walks: the unbiased binomial walk and a memory-dependent walk
driven by a decaying, saturating "information" field.

In the memory walk a walker at site ``i`` hops to neighbour ``j = i +- 1``
with probability proportional to ``exp(u (s_j - s_i))``, where ``s`` counts
past visits with decay ``exp(-kappa)`` per step and is capped at ``s_max``.
``u > 0`` attracts the walker to visited sites, ``u < 0`` repels it.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .distribution import Distribution
from .errors import PreconditionError

__all__ = [
    "CrwConfig",
    "CrwRun",
    "info_update",
    "hop_probabilities",
    "simulate_block",
    "run_memory_crw",
    "binomial_distribution",
    "binomial_walk",
]

EXP_CLAMP = 50.0


@dataclass(frozen=True)
class CrwConfig:
    u: float = 0.0
    kappa: float = 1e-4
    s_max: float = 13.0
    T: int = 60
    reps: int = 10_000
    seed: int = 0
    L: int | None = None

    def __post_init__(self):
        if self.kappa < 0:
            raise PreconditionError(f"kappa={self.kappa} must be >= 0")
        if self.s_max <= 0:
            raise PreconditionError(f"s_max={self.s_max} must be > 0")
        if self.reps < 1:
            raise PreconditionError(f"reps={self.reps} must be >= 1")
        if self.T < 0:
            raise PreconditionError(f"T={self.T} must be >= 0")
        if self.L is not None and self.L < self.T + 1:
            raise PreconditionError(f"L={self.L} must be >= T + 1 so the edges are unreachable")

    @property
    def half_width(self) -> int:
        return self.T + 1 if self.L is None else self.L


@dataclass
class CrwRun:
    distributions: list[Distribution]
    counts: NDArray[np.int64]
    metadata: dict = field(default_factory=dict)


def info_update(field_: ArrayLike, visited: int, kappa: float, s_max: float) -> NDArray[np.float64]:
    """Decay every site by ``exp(-kappa)``, add one visit at ``visited`` and cap at ``s_max``."""
    s = np.asarray(field_, dtype=np.float64) * math.exp(-kappa)
    s[visited] += 1.0
    return np.minimum(s, s_max)


def hop_probabilities(s_left, s_right, s_here, u: float):
    """
    Probabilities of hopping left and right.

    Works elementwise on arrays.  Exponents are clamped to ``+-50``.
    """
    e_left = np.exp(np.clip(u * (np.asarray(s_left) - s_here), -EXP_CLAMP, EXP_CLAMP))
    e_right = np.exp(np.clip(u * (np.asarray(s_right) - s_here), -EXP_CLAMP, EXP_CLAMP))
    total = e_left + e_right
    return e_left / total, e_right / total


def _uniforms(seed: int, reps: range, T: int) -> NDArray[np.float64]:
    # one independent stream per repetition, so any partition of reps gives the same draws
    return np.array([
        np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,))).random(T)
        for r in reps
    ]).reshape(len(reps), T)


def simulate_block(cfg: CrwConfig, start: int, stop: int) -> NDArray[np.int64]:
    """
    Simulate repetitions ``start .. stop-1`` and return occupation counts of
    shape ``(T+1, 2L+1)``.
    """
    L = cfg.half_width
    n = 2 * L + 1
    reps = range(start, stop)
    draws = _uniforms(cfg.seed, reps, cfg.T)
    idx = np.arange(len(reps))
    pos = np.full(len(reps), L)
    s = np.zeros((len(reps), n))
    s[idx, pos] = 1.0
    decay = math.exp(-cfg.kappa)
    counts = np.zeros((cfg.T + 1, n), dtype=np.int64)
    counts[0, L] = len(reps)
    for t in range(cfg.T):
        p_left, _ = hop_probabilities(s[idx, pos - 1], s[idx, pos + 1], s[idx, pos], cfg.u)
        pos = np.where(draws[:, t] < p_left, pos - 1, pos + 1)
        s *= decay
        s[idx, pos] += 1.0
        np.minimum(s, cfg.s_max, out=s)
        counts[t + 1] = np.bincount(pos, minlength=n)
    return counts


def _block(args):
    return simulate_block(*args)


def run_memory_crw(cfg: CrwConfig, workers: int = 1, chunk: int = 2500) -> CrwRun:
    """
    Ensemble-averaged position distributions of the memory walk.

    Repetitions are split into chunks; counts are integers, so the result does
    not depend on ``workers`` or ``chunk``.
    """
    bounds = [(cfg, a, min(a + chunk, cfg.reps)) for a in range(0, cfg.reps, chunk)]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_block, bounds))
    else:
        blocks = [_block(b) for b in bounds]
    counts = np.sum(blocks, axis=0)
    dists = [Distribution(t, counts[t] / cfg.reps) for t in range(cfg.T + 1)]
    meta = {"model": "memory-crw", "u": cfg.u, "kappa": cfg.kappa, "s_max": cfg.s_max,
            "reps": cfg.reps, "seed": cfg.seed, "T": cfg.T, "L": cfg.half_width}
    return CrwRun(dists, counts, meta)


def binomial_distribution(T: int, L: int | None = None) -> Distribution:
    """Exact ``P(x, T)`` of the unbiased nearest-neighbour walk started at 0."""
    if T < 0:
        raise PreconditionError(f"T={T} must be >= 0")
    L = max(T, 1) if L is None else L
    if L < T:
        raise PreconditionError(f"L={L} must be >= T={T}")
    probs = np.zeros(2 * L + 1)
    for x in range(-T, T + 1, 2):
        probs[x + L] = math.comb(T, (T + x) // 2) / 2.0**T
    return Distribution(T, probs)


def binomial_walk(T: int, L: int | None = None) -> list[Distribution]:
    L = max(T, 1) if L is None else L
    return [binomial_distribution(t, L) for t in range(T + 1)]
