"""
Uncorrelated history-dependent walks.

Model A evolves the walker density matrix with a convex mixture of
multi-step "fresh coin" channels applied to past states::

    rho_W(t) = sum_k Gamma_k sum_s A_s^(k) rho_W(t-k) A_s^(k)^dag,
    A_s^(k) = <s| U_CW^k |C>

Model B evolves the coin-walker density matrix with a convex mixture of
unitary conjugations of past states::

    rho_CW(t) = sum_k Gamma_k U^(k) rho_CW(t-k) U^(k)^dag

While fewer than ``M`` past states exist, only the available lags are used and
their weights are renormalized (see :meth:`MixingWeights.effective`).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

from .coined import WalkConfig, initial_state, walk_unitary
from .distribution import Distribution
from .errors import DimensionError, InvariantViolation, PreconditionError, StateError
from .numerics import max_abs, partial_trace_coin

__all__ = [
    "MixingWeights",
    "HistoryBuffer",
    "MixingRun",
    "kraus_pair",
    "kraus_channel",
    "step_kraus_mixing",
    "step_unitary_mixing",
    "run_model_a",
    "run_model_b",
]

TRACE_TOL = 1e-10
HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = 1e-8


@dataclass(frozen=True)
class MixingWeights:
    """Memory weights ``Gamma_1 .. Gamma_M`` (convex)."""

    gammas: tuple[float, ...]

    def __post_init__(self):
        g = tuple(float(x) for x in self.gammas)
        object.__setattr__(self, "gammas", g)
        if not g:
            raise PreconditionError("need at least one memory weight")
        if any(not 0.0 <= x <= 1.0 for x in g):
            raise PreconditionError(f"weights must lie in [0, 1], got {g}")
        if abs(sum(g) - 1.0) > 1e-12:
            raise PreconditionError(f"weights must sum to 1, got {sum(g)!r}")

    @classmethod
    def two_step(cls, gamma: float) -> "MixingWeights":
        """``M = 2`` with ``Gamma_1 = gamma`` and ``Gamma_2 = 1 - gamma``."""
        return cls((gamma, 1.0 - gamma))

    @property
    def M(self) -> int:
        return len(self.gammas)

    def effective(self, available: int) -> tuple[NDArray[np.float64], str]:
        """
        Weights to use when only ``available`` past states exist.

        Returns the weight vector (length ``min(available, M)``) and a tag
        naming the rule applied: ``"full"``, ``"renormalized"`` or, when every
        usable weight is zero, ``"memoryless"`` (all weight on ``k = 1``).
        """
        if available < 1:
            raise StateError("no past states available")
        h = min(available, self.M)
        w = np.array(self.gammas[:h])
        if h == self.M:
            return w, "full"
        total = w.sum()
        if total > 0:
            return w / total, "renormalized"
        w = np.zeros(h)
        w[0] = 1.0
        return w, "memoryless"


class HistoryBuffer:
    """The most recent ``M`` density matrices, newest first."""

    def __init__(self, M: int, states: Sequence[NDArray] = ()):
        if M < 1:
            raise PreconditionError("memory depth must be >= 1")
        self._ring: deque = deque(maxlen=M)
        for s in states:
            self.push(s)

    @property
    def M(self) -> int:
        return self._ring.maxlen

    def push(self, rho: NDArray) -> None:
        self._ring.appendleft(rho)

    def lag(self, k: int) -> NDArray:
        """State ``k`` steps before the one being computed (``k >= 1``)."""
        return self._ring[k - 1]

    def __len__(self) -> int:
        return len(self._ring)

    def __iter__(self):
        return iter(self._ring)


@dataclass
class MixingRun:
    distributions: list[Distribution]
    traces: list[float]
    warmup: dict[int, str]
    final_state: NDArray[np.complex128]
    metadata: dict = field(default_factory=dict)


def _conjugate(op, rho: NDArray) -> NDArray:
    """``op rho op^dag`` for dense or sparse ``op``; the result is always dense."""
    left = np.asarray(op @ rho.conj().T)
    return np.asarray(op @ left.conj().T)


def kraus_pair(cfg: WalkConfig, k: int, L: int | None = None) -> tuple[NDArray, NDArray]:
    """
    Kraus operators ``A_s^(k) = <s| U_CW^k |C>`` for ``s = +, -``.

    They describe ``k`` coherent walk steps with a freshly prepared coin that
    is then discarded.
    """
    if k < 1:
        raise PreconditionError(f"k={k} must be >= 1")
    L = cfg.half_width() if L is None else L
    n = 2 * L + 1
    uk = np.linalg.matrix_power(walk_unitary(cfg, L), k).reshape(2, n, 2, n)
    c = cfg.coin_vector
    return np.tensordot(uk[0], c, axes=(1, 0)), np.tensordot(uk[1], c, axes=(1, 0))


def kraus_channel(pair: Sequence[NDArray], rho: NDArray) -> NDArray:
    """``sum_s A_s rho A_s^dag``."""
    out = np.zeros(rho.shape, dtype=np.complex128)
    for a in pair:
        out += _conjugate(a, rho)
    return out


def step_kraus_mixing(history: HistoryBuffer, w: MixingWeights, kraus: Sequence[Sequence[NDArray]]) -> NDArray:
    """
    One Model A step: ``sum_k Gamma_k sum_s A_s^(k) rho(t-k) A_s^(k)^dag``.

    ``kraus[k-1]`` holds the pair for lag ``k``.
    """
    weights, _ = w.effective(len(history))
    if len(kraus) < len(weights):
        raise DimensionError(f"need Kraus pairs for lags 1..{len(weights)}, got {len(kraus)}")
    out = np.zeros(history.lag(1).shape, dtype=np.complex128)
    for k, g in enumerate(weights, start=1):
        if g:
            out += g * kraus_channel(kraus[k - 1], history.lag(k))
    return out


def step_unitary_mixing(history: HistoryBuffer, w: MixingWeights, unitaries: Sequence[NDArray]) -> NDArray:
    """One Model B step: ``sum_k Gamma_k U^(k) rho(t-k) U^(k)^dag``."""
    weights, _ = w.effective(len(history))
    if len(unitaries) < len(weights):
        raise DimensionError(f"need unitaries for lags 1..{len(weights)}, got {len(unitaries)}")
    out = np.zeros(history.lag(1).shape, dtype=np.complex128)
    for k, g in enumerate(weights, start=1):
        if g:
            out += g * _conjugate(unitaries[k - 1], history.lag(k))
    return out


def _check_density(rho: NDArray, t: int, check_positivity: bool) -> float:
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvariantViolation("trace", f"|tr rho - 1| = {abs(tr - 1):.3e} at t={t}")
    herm = max_abs(rho - rho.conj().T)
    if herm > HERMITIAN_TOL:
        raise InvariantViolation("hermiticity", f"|rho - rho^dag|_max = {herm:.3e} at t={t}")
    if check_positivity:
        lo = np.linalg.eigvalsh(rho)[0]
        if lo < -POSITIVITY_TOL:
            raise InvariantViolation("positivity", f"min eigenvalue {lo:.3e} at t={t}")
    return float(tr.real)


def _sparse(a: NDArray) -> sp.csr_matrix:
    a = a.copy()
    a[np.abs(a) < 1e-15] = 0
    return sp.csr_matrix(a)


def run_model_a(w: MixingWeights, cfg: WalkConfig, positivity_every: int = 10) -> MixingRun:
    """
    Run Model A for ``cfg.T`` steps from ``|walker_init><walker_init|``.

    With ``cfg.L`` unset the lattice half-width is ``T + M``.
    """
    L = cfg.half_width(margin=w.M)
    n = 2 * L + 1
    kraus = [tuple(_sparse(a) for a in kraus_pair(cfg, k, L)) for k in range(1, w.M + 1)]
    rho = np.zeros((n, n), dtype=np.complex128)
    rho[cfg.walker_init + L, cfg.walker_init + L] = 1.0
    history = HistoryBuffer(w.M, [rho])
    dists = [Distribution(0, np.real(np.diag(rho)).copy())]
    traces = [1.0]
    warmup = {}
    for t in range(1, cfg.T + 1):
        _, rule = w.effective(len(history))
        if rule != "full":
            warmup[t] = rule
        rho = step_kraus_mixing(history, w, kraus)
        check = t % positivity_every == 0 or t == cfg.T
        traces.append(_check_density(rho, t, check))
        history.push(rho)
        dists.append(Distribution(t, np.real(np.diag(rho)).copy()))
    return MixingRun(dists, traces, warmup, rho, {"model": "A", "L": L, "gammas": w.gammas, "p": cfg.p})


def run_model_b(w: MixingWeights, cfgs: Sequence[WalkConfig] | WalkConfig, positivity_every: int = 10) -> MixingRun:
    """
    Run Model B.

    ``cfgs`` supplies one walk configuration per lag (they differ only in the
    coin bias ``p_k``); a single config is reused for every lag.  Initial state
    and lattice come from ``cfgs[0]``.
    """
    if isinstance(cfgs, WalkConfig):
        cfgs = [cfgs] * w.M
    if len(cfgs) != w.M:
        raise DimensionError(f"need {w.M} walk configs, got {len(cfgs)}")
    base = cfgs[0]
    if any(c.T != base.T or c.L != base.L for c in cfgs):
        raise PreconditionError("all walk configs must share L and T")
    L = base.half_width(margin=w.M)
    unitaries = [_sparse(walk_unitary(c, L)) for c in cfgs]
    psi = initial_state(base, L).ravel()
    rho = np.outer(psi, psi.conj())
    history = HistoryBuffer(w.M, [rho])
    dists = [Distribution(0, np.real(np.diag(partial_trace_coin(rho))).copy())]
    traces = [1.0]
    warmup = {}
    for t in range(1, base.T + 1):
        _, rule = w.effective(len(history))
        if rule != "full":
            warmup[t] = rule
        rho = step_unitary_mixing(history, w, unitaries)
        check = t % positivity_every == 0 or t == base.T
        traces.append(_check_density(rho, t, check))
        history.push(rho)
        dists.append(Distribution(t, np.real(np.diag(partial_trace_coin(rho))).copy()))
    meta = {"model": "B", "L": L, "gammas": w.gammas, "p": tuple(c.p for c in cfgs)}
    return MixingRun(dists, traces, warmup, rho, meta)
