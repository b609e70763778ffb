"""
Coined walk coupled to a truncated harmonic oscillator (no reservoir).

Each step applies ``U_CW`` and ``exp(-i (H_WO + H_O))`` with
``H_O = (omega/2) a^dag a`` and ``H_WO = lambda P (a + a^dag)``.  The coupling
only involves the walker momentum ``P``, so in the momentum basis the
oscillator propagator splits into one ``(n_max+1)``-square block per lattice
momentum.  Both factors are diagonal in momentum, hence they commute.

States are arrays of shape ``(2, 2L+1, n_max+1)``: coin, walker, oscillator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .coined import WalkConfig, coin_operator, dft_matrix, momenta, walk_step
from .distribution import Distribution
from .errors import DimensionError, InvariantViolation, PreconditionError
from .numerics import unitary_exp

__all__ = [
    "OscillatorParams",
    "BlockPropagator",
    "OscillatorRun",
    "ladder_matrices",
    "build_block_propagator",
    "apply_blocks",
    "cwo_step",
    "initial_state",
    "run_oscillator_walk",
    "DEFAULT_WALK",
]

NORM_TOL = 1e-10

DEFAULT_WALK = WalkConfig(p=0.5, T=60, L=75)


@dataclass(frozen=True)
class OscillatorParams:
    omega: float = 5.0
    coupling: float = 0.0
    n_max: int = 10
    init_level: int = 0

    def __post_init__(self):
        if self.n_max < 1:
            raise PreconditionError(f"n_max={self.n_max} must be >= 1")
        if not 0 <= self.init_level <= self.n_max:
            raise PreconditionError(f"init_level={self.init_level} outside [0, n_max]")
        if not 0.0 <= self.coupling <= 1.0:
            raise PreconditionError(f"coupling={self.coupling} outside [0, 1]")

    @property
    def levels(self) -> int:
        return self.n_max + 1


@dataclass(frozen=True)
class BlockPropagator:
    """``blocks[k]`` is the oscillator propagator at momentum ``theta[k]``."""

    blocks: NDArray[np.complex128]
    theta: NDArray[np.float64]

    @property
    def momentum_independent(self) -> bool:
        return bool(np.all(self.blocks == self.blocks[0]))


@dataclass
class OscillatorRun:
    distributions: list[Distribution]
    populations: NDArray[np.float64]
    norms: list[float]
    final_state: NDArray[np.complex128]


def ladder_matrices(n_max: int) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Truncated lowering and raising operators on ``|0> .. |n_max>``."""
    if n_max < 1:
        raise PreconditionError(f"n_max={n_max} must be >= 1")
    a = np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(np.complex128)
    return a, a.conj().T


def build_block_propagator(params: OscillatorParams, L: int) -> BlockPropagator:
    a, a_dag = ladder_matrices(params.n_max)
    number = a_dag @ a
    position = a + a_dag
    theta = momenta(L)
    blocks = np.array([
        unitary_exp(0.5 * params.omega * number + params.coupling * th * position)
        for th in theta
    ])
    return BlockPropagator(blocks, theta)


def apply_blocks(state: NDArray[np.complex128], prop: BlockPropagator) -> NDArray[np.complex128]:
    """Apply the oscillator propagator: to momenta, per-momentum block, back."""
    if prop.momentum_independent:
        # acts on the oscillator alone; skipping the transform keeps exact zeros exact
        return np.einsum("mn,cxn->cxm", prop.blocks[0], state)
    f = dft_matrix((state.shape[1] - 1) // 2)
    in_k = np.einsum("kx,cxn->ckn", f, state)
    in_k = np.einsum("kmn,ckn->ckm", prop.blocks, in_k)
    return np.einsum("kx,ckn->cxn", f.conj(), in_k)


def _check_shape(state, prop, u_cw=None):
    if state.ndim != 3 or state.shape[0] != 2:
        raise DimensionError(f"state must have shape (2, 2L+1, n_max+1), got {state.shape}")
    if state.shape[1] != prop.theta.size or state.shape[2] != prop.blocks.shape[1]:
        raise DimensionError(
            f"state shape {state.shape} does not match propagator "
            f"({prop.theta.size} momenta, {prop.blocks.shape[1]} levels)"
        )
    if u_cw is not None and u_cw.shape[0] != 2 * state.shape[1]:
        raise DimensionError(f"U_CW of size {u_cw.shape[0]} does not act on walker of size {state.shape[1]}")


def cwo_step(state: NDArray[np.complex128], u_cw: NDArray[np.complex128], prop: BlockPropagator) -> NDArray[np.complex128]:
    """One full step: oscillator propagator, then ``U_CW`` on coin (x) walker."""
    _check_shape(state, prop, u_cw)
    out = apply_blocks(state, prop)
    two_n, levels = u_cw.shape[0], state.shape[2]
    return (u_cw @ out.reshape(two_n, levels)).reshape(state.shape)


def initial_state(params: OscillatorParams, cfg: WalkConfig) -> NDArray[np.complex128]:
    L = cfg.half_width()
    state = np.zeros((2, 2 * L + 1, params.levels), dtype=np.complex128)
    state[:, cfg.walker_init + L, params.init_level] = cfg.coin_vector
    return state


def run_oscillator_walk(params: OscillatorParams, cfg: WalkConfig = DEFAULT_WALK) -> OscillatorRun:
    """
    Evolve for ``cfg.T`` steps from ``|C> |walker_init> |init_level>``.

    Returns walker distributions for every step (coin and oscillator
    marginalized) and the oscillator level populations after the last step.
    """
    L = cfg.half_width()
    prop = build_block_propagator(params, L)
    coin = coin_operator(cfg.p)
    state = initial_state(params, cfg)
    dists = [Distribution(0, (np.abs(state) ** 2).sum(axis=(0, 2)))]
    norms = [1.0]
    for t in range(1, cfg.T + 1):
        state = walk_step(apply_blocks(state, prop), coin, cfg.boundary)
        weights = np.abs(state) ** 2
        norm = float(np.sqrt(weights.sum()))
        if abs(norm - 1.0) > NORM_TOL:
            raise InvariantViolation("norm", f"|psi| = {norm!r} at t={t}")
        norms.append(norm)
        dists.append(Distribution(t, weights.sum(axis=(0, 2))))
    populations = (np.abs(state) ** 2).sum(axis=(0, 1))
    return OscillatorRun(dists, populations, norms, state)
