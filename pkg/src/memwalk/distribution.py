"""Position distributions on the integer lattice ``x = -L .. L``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True)
class Distribution:
    """Walker position probabilities ``P(x, t)`` at one time step."""

    t: int
    probs: NDArray[np.float64]

    @property
    def half_width(self) -> int:
        return (self.probs.size - 1) // 2

    @property
    def sites(self) -> NDArray[np.int64]:
        L = self.half_width
        return np.arange(-L, L + 1)

    def at(self, x: int) -> float:
        L = self.half_width
        if not -L <= x <= L:
            raise IndexError(f"site {x} outside lattice [-{L}, {L}]")
        return float(self.probs[x + L])

    def total(self) -> float:
        return float(self.probs.sum())


def stack(dists: list[Distribution]) -> NDArray[np.float64]:
    """Rows are time steps, columns are sites."""
    return np.vstack([d.probs for d in dists])
