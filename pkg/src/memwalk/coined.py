"""
Memoryless coined quantum walk on a line.

Operators act on ``coin (x) walker`` with the coin as the leading factor and
coin basis ``(|+>, |->)``.  Walker sites ``x = -L .. L`` map to indices
``x + L``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

from .distribution import Distribution
from .errors import PreconditionError
from .numerics import max_abs, tensor, unitary_exp

__all__ = [
    "WalkConfig",
    "BALANCED_COIN",
    "coin_operator",
    "shift_operator",
    "walk_unitary",
    "initial_state",
    "walk_step",
    "evolve_pure",
    "momenta",
    "dft_matrix",
    "momentum_operator",
    "verify_bch_form",
]

BALANCED_COIN = (1 / np.sqrt(2), 1j / np.sqrt(2))
BOUNDARIES = ("periodic", "none-reachable")

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PROJ_PLUS = np.diag([1, 0]).astype(np.complex128)
PROJ_MINUS = np.diag([0, 1]).astype(np.complex128)


@dataclass(frozen=True)
class WalkConfig:
    """
    Parameters of a single coined walk.

    ``L=None`` means "pick a lattice large enough"; callers resolve it with
    :meth:`half_width`, passing the extra margin they need (e.g. the memory
    depth).
    """

    p: float = 0.5
    T: int = 100
    L: int | None = None
    boundary: str = "periodic"
    coin_init: tuple[complex, complex] = field(default=BALANCED_COIN)
    walker_init: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise PreconditionError(f"coin bias p={self.p} outside [0, 1]")
        if self.T < 0:
            raise PreconditionError(f"T={self.T} must be non-negative")
        if self.boundary not in BOUNDARIES:
            raise PreconditionError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        norm = abs(self.coin_init[0]) ** 2 + abs(self.coin_init[1]) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise PreconditionError(f"coin_init not normalized (|C+|^2 + |C-|^2 = {norm!r})")
        if self.L is not None:
            if self.L < 1:
                raise PreconditionError(f"L={self.L} must be >= 1")
            if abs(self.walker_init) > self.L:
                raise PreconditionError(f"walker_init={self.walker_init} outside [-L, L]")
            if self.boundary == "none-reachable" and self.L < self.T + abs(self.walker_init):
                raise PreconditionError("none-reachable boundary needs L >= T + |walker_init|")

    def half_width(self, margin: int = 0) -> int:
        if self.L is not None:
            return self.L
        return max(1, self.T + margin + abs(self.walker_init))

    def resolved(self, margin: int = 0) -> "WalkConfig":
        return replace(self, L=self.half_width(margin))

    @property
    def coin_vector(self) -> NDArray[np.complex128]:
        return np.asarray(self.coin_init, dtype=np.complex128)


def coin_operator(p: float) -> NDArray[np.complex128]:
    """
    Biased coin-toss unitary ``[[sqrt(p), sqrt(1-p)], [sqrt(1-p), -sqrt(p)]]``.

    ``p = 1/2`` gives the Hadamard coin.
    """
    if not 0.0 <= p <= 1.0:
        raise PreconditionError(f"coin bias p={p} outside [0, 1]")
    a, b = np.sqrt(p), np.sqrt(1.0 - p)
    return np.array([[a, b], [b, -a]], dtype=np.complex128)


def shift_operator(L: int, boundary: str = "periodic") -> NDArray[np.complex128]:
    """
    Right shift ``|x> -> |x+1>`` on ``2L+1`` sites.

    With ``boundary="periodic"`` the edge wraps, ``|L> -> |-L>``; with
    ``"none-reachable"`` the edge amplitude is dropped, which is harmless as
    long as the walker can never get there.
    """
    if L < 1:
        raise PreconditionError(f"L={L} must be >= 1")
    n = 2 * L + 1
    s = np.zeros((n, n), dtype=np.complex128)
    s[np.arange(1, n), np.arange(n - 1)] = 1.0
    if boundary == "periodic":
        s[0, n - 1] = 1.0
    elif boundary != "none-reachable":
        raise PreconditionError(f"unknown boundary {boundary!r}")
    return s


def walk_unitary(cfg: WalkConfig, L: int | None = None) -> NDArray[np.complex128]:
    """``(P+ (x) S + P- (x) S^dag)(u_C(p) (x) 1_W)`` of dimension ``2(2L+1)``."""
    L = cfg.half_width() if L is None else L
    s = shift_operator(L, cfg.boundary)
    n = 2 * L + 1
    cond_shift = tensor(PROJ_PLUS, s) + tensor(PROJ_MINUS, s.conj().T)
    return cond_shift @ tensor(coin_operator(cfg.p), np.eye(n))


def initial_state(cfg: WalkConfig, L: int | None = None) -> NDArray[np.complex128]:
    """``|C> (x) |walker_init>`` as a ``(2, 2L+1)`` array."""
    L = cfg.half_width() if L is None else L
    psi = np.zeros((2, 2 * L + 1), dtype=np.complex128)
    psi[:, cfg.walker_init + L] = cfg.coin_vector
    return psi


def walk_step(psi: NDArray[np.complex128], coin: NDArray[np.complex128], boundary: str = "periodic") -> NDArray[np.complex128]:
    """
    Apply one coin toss and conditional shift to ``psi``.

    ``psi`` has the coin on axis 0 and the walker on axis 1; any trailing axes
    (e.g. an oscillator factor) are carried along untouched.
    """
    out = np.tensordot(coin, psi, axes=(1, 0))
    if boundary == "periodic":
        out[0] = np.roll(out[0], 1, axis=0)
        out[1] = np.roll(out[1], -1, axis=0)
    else:
        up = np.zeros_like(out[0])
        down = np.zeros_like(out[1])
        up[1:] = out[0, :-1]
        down[:-1] = out[1, 1:]
        out[0], out[1] = up, down
    return out


def evolve_pure(cfg: WalkConfig, L: int | None = None) -> list[Distribution]:
    """Position distributions for ``t = 0 .. T`` of the memoryless walk."""
    L = cfg.half_width() if L is None else L
    coin = coin_operator(cfg.p)
    psi = initial_state(cfg, L)
    dists = [Distribution(0, (np.abs(psi) ** 2).sum(axis=0))]
    for t in range(1, cfg.T + 1):
        psi = walk_step(psi, coin, cfg.boundary)
        dists.append(Distribution(t, (np.abs(psi) ** 2).sum(axis=0)))
    return dists


def momenta(L: int) -> NDArray[np.float64]:
    """Lattice momenta ``theta_k = 2 pi k / (2L+1)`` for ``k = -L .. L``."""
    return 2 * np.pi * np.arange(-L, L + 1) / (2 * L + 1)


def dft_matrix(L: int) -> NDArray[np.complex128]:
    """
    Unitary change of basis from positions to momenta.

    Row ``k`` is ``<k~|`` where ``|k~> = sum_x exp(-i theta_k x) |x> / sqrt(N)``,
    so that ``S |k~> = exp(i theta_k) |k~>``.
    """
    x = np.arange(-L, L + 1)
    return np.exp(1j * np.outer(momenta(L), x)) / np.sqrt(2 * L + 1)


def momentum_operator(L: int) -> NDArray[np.complex128]:
    """Hermitian ``P`` with ``exp(iP) = S`` on the periodic lattice."""
    f = dft_matrix(L)
    return (f.conj().T * momenta(L)) @ f


def verify_bch_form(cfg: WalkConfig, L: int | None = None) -> float:
    """
    Check ``U_CW(p) = e^{i pi/2} e^{i Z (x) P} e^{-i (pi/2)(sqrt(1-p) X + sqrt(p) Z)}``.

    Returns the max-abs residual against :func:`walk_unitary`.  Only exact for
    the periodic lattice.
    """
    if cfg.boundary != "periodic":
        raise PreconditionError("verify_bch_form requires a periodic lattice")
    L = cfg.half_width() if L is None else L
    n = 2 * L + 1
    translation = unitary_exp(tensor(PAULI_Z, momentum_operator(L)), -1.0)
    axis = np.sqrt(1 - cfg.p) * PAULI_X + np.sqrt(cfg.p) * PAULI_Z
    rotation = tensor(unitary_exp(axis, np.pi / 2), np.eye(n))
    product = 1j * translation @ rotation
    return max_abs(product - walk_unitary(cfg, L))
