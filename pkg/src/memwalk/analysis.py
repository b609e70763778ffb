"""
Post-processing of walk outputs: variances, fits, fixed-site correlations
and peak structure.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .distribution import Distribution
from .errors import PreconditionError

__all__ = [
    "TimeSeries",
    "FitResult",
    "BifurcationResult",
    "variance_series",
    "fit_quadratic",
    "probability_series",
    "autocorrelation",
    "fit_power_law",
    "power_law_window",
    "find_peaks",
    "peak_count",
    "bifurcation_sweep",
    "gamma_sweep",
    "model_a_final",
    "oscillator_series",
]

PROMINENCE = 1e-4
REL_HEIGHT = 0.5


@dataclass
class TimeSeries:
    """Values on an integer axis (time ``t`` or lag ``tau``) starting at 0."""

    values: NDArray[np.float64]
    site: int | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(self.values)):
            raise PreconditionError("time series contains non-finite values")

    @property
    def axis(self) -> NDArray[np.int64]:
        return np.arange(self.values.size)

    def __len__(self) -> int:
        return self.values.size


@dataclass
class FitResult:
    coefficients: dict[str, float]
    residual: float
    window: str
    converged: bool = True
    iterations: int = 0
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return self.coefficients[name]

    def as_dict(self) -> dict:
        out = dict(self.coefficients)
        out.update(residual=self.residual, window=self.window, converged=self.converged)
        return out


def variance_series(dists: Sequence[Distribution]) -> TimeSeries:
    """``sigma^2(t) = <x^2> - <x>^2`` for each distribution."""
    out = np.empty(len(dists))
    for i, d in enumerate(dists):
        x = d.sites
        mean = d.probs @ x
        out[i] = max(d.probs @ (x - mean) ** 2, 0.0)
    return TimeSeries(out, metadata={"quantity": "variance"})


def fit_quadratic(series: TimeSeries, t: ArrayLike | None = None) -> FitResult:
    """Least-squares ``a t^2 + b t + c`` over the whole series."""
    y = series.values
    t = series.axis.astype(np.float64) if t is None else np.asarray(t, dtype=np.float64)
    if y.size < 3 or np.unique(t).size < 3:
        raise PreconditionError("quadratic fit needs at least 3 distinct abscissae")
    design = np.column_stack([t**2, t, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return FitResult(
        {"a": float(coef[0]), "b": float(coef[1]), "c": float(coef[2])},
        float(resid @ resid),
        f"t in [{int(t.min())}, {int(t.max())}]",
    )


def probability_series(dists: Sequence[Distribution], site: int) -> TimeSeries:
    """``P(site, t)`` for ``t = 0 .. T``."""
    L = dists[0].half_width
    if not -L <= site <= L:
        raise PreconditionError(f"site {site} outside lattice [-{L}, {L}]")
    return TimeSeries(np.array([d.probs[site + L] for d in dists]), site=site)


def autocorrelation(series: TimeSeries) -> TimeSeries:
    """``C(tau) = sum_{t=0}^{T-tau} P(t) P(t+tau)`` for ``tau = 0 .. T``."""
    p = series.values
    if p.size < 2:
        raise PreconditionError("autocorrelation needs at least 2 samples")
    n = p.size
    c = np.array([p[: n - tau] @ p[tau:] for tau in range(n)])
    return TimeSeries(c, site=series.site, metadata={**series.metadata, "quantity": "autocorrelation"})


def power_law_window(corr: TimeSeries) -> tuple[int, int]:
    """Default lag window ``[2, T/2]``."""
    return 2, (len(corr) - 1) // 2


def _power_model(params, tau):
    a, b, g = params
    with np.errstate(over="ignore", invalid="ignore"):
        pw = tau ** (-g)
        return a + b * pw, pw


def _loglog_start(tau, y):
    decreasing = y[0] >= y[-1]
    a0 = y.min() if decreasing else y.max()
    gap = (y - a0) if decreasing else (a0 - y)
    keep = gap > 0
    if keep.sum() >= 2:
        slope, icpt = np.polyfit(np.log(tau[keep]), np.log(gap[keep]), 1)
        b0 = np.exp(icpt) if decreasing else -np.exp(icpt)
        g0 = -slope
    else:
        b0, g0 = y[0] - a0, 1.0
    return np.array([a0, b0, g0], dtype=np.float64)


def _levenberg_marquardt(x, y, params, max_iter, tol):
    fitted, pw = _power_model(params, x)
    r = y - fitted
    rss = r @ r
    damping = 1e-3
    it = 0
    for it in range(1, max_iter + 1):
        jac = np.column_stack([np.ones_like(x), pw, -params[1] * np.log(x) * pw])
        jtj = jac.T @ jac
        grad = jac.T @ r
        diag = np.diag(jtj).copy()
        diag[diag == 0] = 1.0
        while True:
            try:
                step = np.linalg.solve(jtj + damping * np.diag(diag), grad)
            except np.linalg.LinAlgError:
                step = np.zeros(3)
            trial = params + step
            fitted_t, pw_t = _power_model(trial, x)
            r_t = y - fitted_t
            with np.errstate(over="ignore", invalid="ignore"):
                rss_t = r_t @ r_t
            if np.isfinite(rss_t) and rss_t <= rss:
                break
            damping *= 10.0
            if damping > 1e16:
                # no descent direction left at working precision
                return params, rss, True, it
        small = np.all(np.abs(step) <= tol * (np.abs(params) + tol))
        params, pw, r, rss = trial, pw_t, r_t, rss_t
        damping = max(damping / 10.0, 1e-15)
        if small:
            return params, rss, True, it
    return params, rss, False, it


def _profile_start(x, y, grid=np.linspace(-3.0, 5.0, 801)):
    # a, b enter linearly, so scan gamma and solve for them exactly
    best = None
    for g in grid:
        if abs(g) < 1e-9:
            continue
        design = np.column_stack([np.ones_like(x), x ** (-g)])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        r = y - design @ coef
        rss = r @ r
        if best is None or rss < best[0]:
            best = (rss, np.array([coef[0], coef[1], g]))
    return best[1]


def fit_power_law(
    corr: TimeSeries,
    even_only: bool = True,
    window: tuple[int, int] | None = None,
    max_iter: int = 200,
    tol: float = 1e-10,
) -> FitResult:
    """
    Fit ``C(tau) ~ a + b tau^-gamma`` by damped Gauss-Newton.

    The primary start takes ``a`` from the extreme of the data and
    ``(b, gamma)`` from a log-log regression of ``C - a``.  Because ``a`` and
    ``b`` diverge as ``gamma -> 0`` the iteration cannot cross to negative
    exponents, so a second start comes from scanning ``gamma`` with ``a, b``
    solved linearly; the lower-residual result wins.  Iteration stops once the
    step is below ``tol`` relative to the parameters; if ``max_iter`` is
    exhausted the best iterate is returned with ``converged=False``.
    """
    lo, hi = power_law_window(corr) if window is None else window
    tau = corr.axis
    mask = (tau >= max(lo, 1)) & (tau <= hi)
    if even_only:
        mask &= tau % 2 == 0
    x = tau[mask].astype(np.float64)
    y = corr.values[mask]
    if x.size < 6:
        raise PreconditionError(f"power-law fit needs >= 6 usable lags, got {x.size}")

    runs = [
        _levenberg_marquardt(x, y, _loglog_start(x, y), max_iter, tol),
        _levenberg_marquardt(x, y, _profile_start(x, y), max_iter, tol),
    ]
    params, rss, converged, it = min(runs, key=lambda run: (not np.isfinite(run[1]), run[1]))
    tag = "even " if even_only else ""
    return FitResult(
        {"a": float(params[0]), "b": float(params[1]), "gamma": float(params[2])},
        float(rss),
        f"{tag}tau in [{lo}, {hi}]",
        converged=converged and bool(np.isfinite(rss)),
        iterations=it,
    )


def _support_parity(probs: NDArray[np.float64], L: int) -> int | None:
    x = np.arange(-L, L + 1)
    even = probs[x % 2 == 0].sum()
    odd = probs[x % 2 == 1].sum()
    total = even + odd
    if odd <= 1e-14 * total:
        return 0
    if even <= 1e-14 * total:
        return 1
    return None


def find_peaks(
    dist: Distribution | ArrayLike,
    prominence: float = PROMINENCE,
    rel_height: float = REL_HEIGHT,
    smooth: bool = True,
) -> list[int]:
    """
    Positions of the dominant maxima of a distribution.

    When the support lives on one parity sublattice only that sublattice is
    searched.  With ``smooth`` the (sub)lattice values are filtered with the
    kernel ``(1/4, 1/2, 1/4)``, which removes site-to-site alternation.  A
    candidate must be strictly above both neighbours, exceed the nearest
    minimum on each side by ``prominence`` and reach ``rel_height`` times the
    highest candidate.

    A plain array is treated as a distribution on ``-L .. L``.
    """
    probs = dist.probs if isinstance(dist, Distribution) else np.asarray(dist, dtype=np.float64)
    L = (probs.size - 1) // 2
    x = np.arange(-L, L + 1) if probs.size % 2 else np.arange(probs.size)
    parity = _support_parity(probs, L) if probs.size % 2 else None
    if parity is not None:
        sel = x % 2 == parity
        x, v = x[sel], probs[sel]
    else:
        v = probs
    if smooth and v.size >= 3:
        padded = np.concatenate([[v[0]], v, [v[-1]]])
        v = 0.25 * padded[:-2] + 0.5 * padded[1:-1] + 0.25 * padded[2:]

    n = v.size
    candidates = []
    for i in range(n):
        left = v[i - 1] if i > 0 else -np.inf
        right = v[i + 1] if i < n - 1 else -np.inf
        if not (v[i] > left and v[i] > right):
            continue
        j = i
        while j > 0 and v[j - 1] < v[j]:
            j -= 1
        k = i
        while k < n - 1 and v[k + 1] < v[k]:
            k += 1
        if v[i] - v[j] >= prominence and v[i] - v[k] >= prominence or n == 1:
            candidates.append(i)
    if not candidates:
        return []
    top = max(v[i] for i in candidates)
    return [int(x[i]) for i in candidates if v[i] >= rel_height * top]


def peak_count(dist, **kw) -> int:
    return len(find_peaks(dist, **kw))


@dataclass
class BifurcationResult:
    gammas: list[float]
    peaks: list[list[int]]
    threshold: float | None

    def counts(self) -> list[int]:
        return [len(p) for p in self.peaks]


def model_a_final(gamma: float, T: int = 100, p: float = 0.5) -> Distribution:
    """``P(x, T)`` of Model A with ``M = 2``, ``Gamma = (gamma, 1 - gamma)``."""
    from .coined import WalkConfig
    from .mixing import MixingWeights, run_model_a

    return run_model_a(MixingWeights.two_step(gamma), WalkConfig(p=p, T=T)).distributions[-1]


def _map(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def bifurcation_sweep(
    grid: Sequence[float],
    runner: Callable[[float], Distribution] = model_a_final,
    workers: int = 1,
    **peak_kw,
) -> BifurcationResult:
    """
    Peak positions of ``runner(gamma)`` over ``grid``.

    The threshold is the midpoint between the last bimodal grid point and the
    first unimodal one after it (``None`` if there is no such transition).
    """
    grid = [float(g) for g in grid]
    if any(not 0.0 <= g <= 1.0 for g in grid):
        raise PreconditionError("memory weights must lie in [0, 1]")
    dists = _map(runner, grid, workers)
    peaks = [find_peaks(d, **peak_kw) for d in dists]
    threshold = None
    for i in range(1, len(grid)):
        if len(peaks[i - 1]) == 2 and len(peaks[i]) == 1:
            threshold = 0.5 * (grid[i - 1] + grid[i])
            break
    return BifurcationResult(grid, peaks, threshold)


def oscillator_series(coupling: float, site: int = 0) -> TimeSeries:
    """``P(site, t)`` of the oscillator walk at the default parameters."""
    from .oscillator import OscillatorParams, run_oscillator_walk

    run = run_oscillator_walk(OscillatorParams(coupling=coupling))
    series = probability_series(run.distributions, site)
    series.metadata.update(model="oscillator", coupling=coupling)
    return series


def gamma_sweep(
    grid: Sequence[float],
    runner: Callable[[float], TimeSeries] = oscillator_series,
    window: tuple[int, int] | None = None,
    workers: int = 1,
) -> list[FitResult]:
    """Correlation exponent of ``autocorrelation(runner(lambda))`` for each coupling."""
    grid = [float(g) for g in grid]
    if any(not 0.0 <= g <= 1.0 for g in grid):
        raise PreconditionError("couplings must lie in [0, 1]")
    results = []
    for lam, series in zip(grid, _map(runner, grid, workers)):
        fit = fit_power_law(autocorrelation(series), window=window)
        fit.metadata.update(coupling=lam, site=series.site)
        results.append(fit)
    return results
