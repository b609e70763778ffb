"""
Named reproduction experiments and the runner that writes their outputs.

Every experiment has a table of defaults; a config may override any of them
but may not introduce new keys.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .analysis import (
    autocorrelation,
    bifurcation_sweep,
    find_peaks,
    fit_power_law,
    fit_quadratic,
    probability_series,
    variance_series,
)
from .classical import CrwConfig, run_memory_crw
from .coined import WalkConfig, evolve_pure
from .errors import ConfigError, PreconditionError
from .mixing import MixingWeights, run_model_a, run_model_b
from .oscillator import OscillatorParams, run_oscillator_walk
from .output import Series, emit_csv, emit_json, emit_svg_plot, format_number, sha256_file

log = logging.getLogger(__name__)

__all__ = ["ExperimentConfig", "RunManifest", "EXPERIMENTS", "DEFAULTS", "run_experiment"]

FORMATS = ("csv", "json", "svg")


def _grid(lo, hi, step):
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(n + 1)]


DEFAULTS: dict[str, dict] = {
    "fig1-variance": {"gammas": [0.0, 0.2, 0.4, 0.6, 0.8, 1.0], "T": 100, "p": 0.5},
    "fig2-bifurcation": {"gamma_min": 0.0, "gamma_max": 1.0, "gamma_step": 0.02, "T": 100, "p": 0.5,
                         "prominence": 1e-4, "rel_height": 0.5},
    "fig3-modelb": {"gammas": _grid(0.0, 0.9, 0.1), "surface_gamma": 2 / 3, "T": 100, "p": [0.5, 0.5],
                    "prominence": 1e-4, "rel_height": 0.5},
    "fig4-probdist": {"couplings": [0.0, 0.1], "T": 60, "L": 75, "omega": 5.0, "n_max": 10},
    "fig5-variance": {"couplings": [0.0, 0.01, 0.1, 1.0], "T": 60, "L": 75, "omega": 5.0, "n_max": 10},
    "fig6-correlation": {"couplings": [0.0, 0.01, 0.1], "u_values": [0.1, 0.0, -0.1], "T": 60, "L": 75,
                         "omega": 5.0, "n_max": 10, "kappa": 1e-4, "s_max": 13.0, "reps": 10_000,
                         "site": 0, "window": [2, 30]},
    "fig7-gamma-sweep": {"couplings": _grid(0.0, 1.0, 0.05), "T": 60, "L": 75, "omega": 5.0, "n_max": 10,
                         "site": 0, "window": [2, 30]},
    "custom": {"model": "coined", "T": 60, "L": None, "p": 0.5, "gammas": [1.0], "coupling": 0.0,
               "omega": 5.0, "n_max": 10, "u": 0.0, "kappa": 1e-4, "s_max": 13.0, "reps": 10_000,
               "site": 0, "window": None},
}

CUSTOM_MODELS = ("coined", "model-a", "model-b", "oscillator", "crw")


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    out: str = "out"
    formats: tuple[str, ...] = FORMATS
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in DEFAULTS:
            raise ConfigError("experiment", f"unknown experiment {self.experiment!r}; choose from {sorted(DEFAULTS)}")
        unknown = sorted(set(self.params) - set(DEFAULTS[self.experiment]))
        if unknown:
            raise ConfigError(f"params.{unknown[0]}", f"not a parameter of {self.experiment}")
        self.formats = tuple(self.formats)
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ConfigError("formats", f"unsupported format {bad[0]!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed", "must be a non-negative integer")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers", "must be a positive integer")

    def effective_params(self) -> dict:
        return {**DEFAULTS[self.experiment], **self.params}

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "params": dict(self.params), "out": self.out,
                "formats": list(self.formats), "seed": self.seed, "workers": self.workers}

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        allowed = {"experiment", "params", "out", "formats", "seed", "workers"}
        unknown = sorted(set(doc) - allowed)
        if unknown:
            raise ConfigError(unknown[0], "unknown config key")
        if "experiment" not in doc:
            raise ConfigError("experiment", "missing")
        params = doc.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("params", "must be an object")
        return cls(doc["experiment"], dict(params), doc.get("out", "out"),
                   tuple(doc.get("formats", FORMATS)), doc.get("seed", 0), doc.get("workers", 1))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
        return cls.from_dict(doc)


@dataclass
class RunManifest:
    config: dict
    effective_params: dict
    version: str
    seeds: list[int]
    duration_s: float
    files: list[dict]

    def as_dict(self) -> dict:
        return {"config": self.config, "effective_params": self.effective_params, "version": self.version,
                "seeds": self.seeds, "duration_s": self.duration_s, "files": self.files}


class _Sink:
    """Collects outputs, honouring the requested formats."""

    def __init__(self, out: Path, formats):
        self.out = out
        self.formats = set(formats)
        self.files: list[Path] = []

    def csv(self, name, header, rows):
        if "csv" in self.formats:
            self.files.append(emit_csv(header, rows, self.out / name))

    def json(self, name, doc):
        if "json" in self.formats:
            self.files.append(emit_json(doc, self.out / name))

    def svg(self, name, series, xlabel, ylabel, **kw):
        if "svg" in self.formats:
            self.files.append(emit_svg_plot(series, xlabel, ylabel, self.out / name, **kw))


def _label(name, value):
    return f"{name}={format_number(value)}"


def _num(params, key, kind=float):
    v = params[key]
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            raise ConfigError(f"params.{key}", f"expected an integer, got {v!r}")
        return int(v)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"params.{key}", f"expected a number, got {v!r}")
    return float(v)


def _numlist(params, key):
    v = params[key]
    if not isinstance(v, (list, tuple)) or not v or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
        raise ConfigError(f"params.{key}", f"expected a non-empty list of numbers, got {v!r}")
    return [float(x) for x in v]


def _window(params):
    v = params.get("window")
    if v is None:
        return None
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ConfigError("params.window", "expected [tau_min, tau_max]")
    return int(v[0]), int(v[1])


def _osc(params, coupling):
    try:
        osc = OscillatorParams(omega=_num(params, "omega"), coupling=coupling, n_max=_num(params, "n_max", int))
        cfg = WalkConfig(p=0.5, T=_num(params, "T", int), L=_num(params, "L", int))
    except PreconditionError as exc:
        raise ConfigError("params", str(exc)) from exc
    return run_oscillator_walk(osc, cfg)


def _variance_rows(key_value, dists):
    var = variance_series(dists)
    return var, [(key_value, t, v) for t, v in enumerate(var.values)]


# -- experiments ------------------------------------------------------------

def _fig1(params, sink, cfg):
    T, p = _num(params, "T", int), _num(params, "p")
    rows, fits, series = [], {}, []
    for g in _numlist(params, "gammas"):
        run = run_model_a(MixingWeights.two_step(g), WalkConfig(p=p, T=T))
        var, r = _variance_rows(g, run.distributions)
        rows += r
        fits[_label("gamma", g)] = fit_quadratic(var).as_dict()
        series.append(Series(_label("Gamma", g), var.axis, var.values))
    sink.csv("variance.csv", ("gamma", "t", "sigma2"), rows)
    sink.json("fits.json", fits)
    sink.svg("variance.svg", series, "t", "sigma^2", title="Model A variance")


def _model_a_point(args):
    g, T, p = args
    return run_model_a(MixingWeights.two_step(g), WalkConfig(p=p, T=T)).distributions[-1]


def _fig2(params, sink, cfg):
    T, p = _num(params, "T", int), _num(params, "p")
    grid = _grid(_num(params, "gamma_min"), _num(params, "gamma_max"), _num(params, "gamma_step"))
    from .analysis import _map
    dists = _map(_model_a_point, [(g, T, p) for g in grid], cfg.workers)
    res = bifurcation_sweep(grid, runner=dict(zip(grid, dists)).__getitem__,
                            prominence=_num(params, "prominence"), rel_height=_num(params, "rel_height"))
    rows = [(g, x) for g, pk in zip(res.gammas, res.peaks) for x in pk]
    sink.csv("peaks.csv", ("gamma", "peak_x"), rows)
    sink.json("summary.json", {"threshold": res.threshold, "counts": dict(zip(map(format_number, grid), res.counts()))})
    sink.svg("peaks.svg", [Series("peaks", [r[0] for r in rows], [r[1] for r in rows], scatter=True)],
             "Gamma", "peak position x", title="Model A peak positions")


def _model_b_run(args):
    g, T, ps = args
    w = MixingWeights.two_step(g)
    return run_model_b(w, [WalkConfig(p=pk, T=T) for pk in ps])


def _model_b_point(args):
    return _model_b_run(args).distributions[-1]


def _fig3(params, sink, cfg):
    T = _num(params, "T", int)
    ps = _numlist(params, "p")
    if len(ps) != 2:
        raise ConfigError("params.p", "Model B with M=2 needs two coin biases")
    grid = _numlist(params, "gammas")
    from .analysis import _map
    finals = _map(_model_b_point, [(g, T, ps) for g in grid], cfg.workers)
    rows, peak_rows, series = [], [], []
    for g, d in zip(grid, finals):
        rows += [(g, d.t, x, pr) for x, pr in zip(d.sites, d.probs)]
        peak_rows += [(g, x) for x in find_peaks(d, prominence=_num(params, "prominence"),
                                                 rel_height=_num(params, "rel_height"))]
        series.append(Series(_label("Gamma", g), d.sites, d.probs))
    sink.csv("distribution.csv", ("gamma", "t", "x", "p"), rows)
    sink.csv("peaks.csv", ("gamma", "peak_x"), peak_rows)
    surface = _model_b_run((_num(params, "surface_gamma"), T, ps)).distributions
    sink.csv("surface.csv", ("t", "x", "p"), [(d.t, x, pr) for d in surface for x, pr in zip(d.sites, d.probs)])
    sink.svg("distribution.svg", series, "x", f"P(x,{T})", title="Model B final distributions")


def _fig4(params, sink, cfg):
    rows, series = [], []
    for lam in _numlist(params, "couplings"):
        d = _osc(params, lam).distributions[-1]
        rows += [(lam, d.t, x, pr) for x, pr in zip(d.sites, d.probs)]
        series.append(Series(_label("lambda", lam), d.sites, d.probs))
    sink.csv("distribution.csv", ("lambda", "t", "x", "p"), rows)
    sink.svg("distribution.svg", series, "x", "P(x,T)", title="Oscillator walk distribution")


def _fig5(params, sink, cfg):
    rows, fits, series, pops = [], {}, [], {}
    for lam in _numlist(params, "couplings"):
        run = _osc(params, lam)
        var, r = _variance_rows(lam, run.distributions)
        rows += r
        fits[_label("lambda", lam)] = fit_quadratic(var).as_dict()
        pops[_label("lambda", lam)] = run.populations.tolist()
        series.append(Series(_label("lambda", lam), var.axis, var.values))
    sink.csv("variance.csv", ("lambda", "t", "sigma2"), rows)
    sink.json("fits.json", fits)
    sink.json("summary.json", {"final_level_populations": pops})
    sink.svg("variance.svg", series, "t", "sigma^2", title="Oscillator walk variance")


def _crw_point(args):
    return run_memory_crw(args)


def _fig6(params, sink, cfg):
    site, window = _num(params, "site", int), _window(params)
    rows, fits, series = [], {}, []

    def record(label, dists):
        corr = autocorrelation(probability_series(dists, site))
        rows.extend((label, tau, c) for tau, c in zip(corr.axis, corr.values))
        fits[label] = fit_power_law(corr, window=window).as_dict()
        even = corr.axis[2::2]
        series.append(Series(label, even, corr.values[2::2]))

    for lam in _numlist(params, "couplings"):
        record(_label("qrw_lambda", lam), _osc(params, lam).distributions)
    T = _num(params, "T", int)
    crws = [CrwConfig(u=u, kappa=_num(params, "kappa"), s_max=_num(params, "s_max"), T=T,
                      reps=_num(params, "reps", int), seed=cfg.seed) for u in _numlist(params, "u_values")]
    for c in crws:
        record(_label("crw_u", c.u), run_memory_crw(c, workers=cfg.workers).distributions)
    sink.csv("correlation.csv", ("run", "tau", "C"), rows)
    sink.json("fits.json", fits)
    sink.svg("correlation.svg", series, "tau", "C(tau)", title="Fixed-site autocorrelation", log_x=True, log_y=True)


def _osc_series_point(args):
    params, lam = args
    run = _osc(params, lam)
    return probability_series(run.distributions, _num(params, "site", int))


def _fig7(params, sink, cfg):
    grid = _numlist(params, "couplings")
    window = _window(params)
    from .analysis import _map
    series_list = _map(_osc_series_point, [(params, lam) for lam in grid], cfg.workers)
    rows = []
    for lam, s in zip(grid, series_list):
        fit = fit_power_law(autocorrelation(s), window=window)
        rows.append((lam, fit["gamma"], fit["a"], fit["b"], fit.residual))
    sink.csv("gamma_sweep.csv", ("lambda", "gamma", "a", "b", "residual"), rows)
    sink.svg("gamma_sweep.svg", [Series("gamma", [r[0] for r in rows], [r[1] for r in rows])],
             "lambda", "gamma", title="Correlation exponent vs coupling")


def _custom(params, sink, cfg):
    model = params["model"]
    if model not in CUSTOM_MODELS:
        raise ConfigError("params.model", f"choose from {CUSTOM_MODELS}")
    T = _num(params, "T", int)
    L = None if params["L"] is None else _num(params, "L", int)
    try:
        if model == "coined":
            dists = evolve_pure(WalkConfig(p=_num(params, "p"), T=T, L=L))
        elif model in ("model-a", "model-b"):
            w = MixingWeights(tuple(_numlist(params, "gammas")))
            walk = WalkConfig(p=_num(params, "p"), T=T, L=L)
            dists = (run_model_a(w, walk) if model == "model-a" else run_model_b(w, walk)).distributions
        elif model == "oscillator":
            osc = OscillatorParams(omega=_num(params, "omega"), coupling=_num(params, "coupling"),
                                   n_max=_num(params, "n_max", int))
            dists = run_oscillator_walk(osc, WalkConfig(p=_num(params, "p"), T=T, L=75 if L is None else L)).distributions
        else:
            crw = CrwConfig(u=_num(params, "u"), kappa=_num(params, "kappa"), s_max=_num(params, "s_max"),
                            T=T, reps=_num(params, "reps", int), seed=cfg.seed, L=L)
            dists = run_memory_crw(crw, workers=cfg.workers).distributions
    except PreconditionError as exc:
        raise ConfigError("params", str(exc)) from exc
    sink.csv("distribution.csv", ("t", "x", "p"), [(d.t, x, pr) for d in dists for x, pr in zip(d.sites, d.probs)])
    var = variance_series(dists)
    sink.csv("variance.csv", ("t", "sigma2"), list(zip(var.axis, var.values)))
    corr = autocorrelation(probability_series(dists, _num(params, "site", int)))
    sink.csv("correlation.csv", ("tau", "C"), list(zip(corr.axis, corr.values)))
    fits = {"variance": fit_quadratic(var).as_dict()}
    try:
        fits["correlation"] = fit_power_law(corr, window=_window(params)).as_dict()
    except PreconditionError as exc:
        log.warning("skipping power-law fit: %s", exc)
    sink.json("fits.json", fits)
    sink.svg("variance.svg", [Series(model, var.axis, var.values)], "t", "sigma^2")


EXPERIMENTS: dict[str, Callable] = {
    "fig1-variance": _fig1,
    "fig2-bifurcation": _fig2,
    "fig3-modelb": _fig3,
    "fig4-probdist": _fig4,
    "fig5-variance": _fig5,
    "fig6-correlation": _fig6,
    "fig7-gamma-sweep": _fig7,
    "custom": _custom,
}

STOCHASTIC = {"fig6-correlation", "custom"}


def run_experiment(cfg: ExperimentConfig) -> RunManifest:
    """
    Run one experiment, write its outputs into ``cfg.out`` and finish with
    ``manifest.json`` listing every file and its SHA-256 digest.
    """
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    params = cfg.effective_params()
    sink = _Sink(out, cfg.formats)
    start = time.perf_counter()
    log.info("running %s into %s", cfg.experiment, out)
    EXPERIMENTS[cfg.experiment](params, sink, cfg)
    duration = time.perf_counter() - start
    files = [{"path": f.name, "sha256": sha256_file(f), "bytes": f.stat().st_size} for f in sink.files]
    manifest = RunManifest(
        config=cfg.to_dict(),
        effective_params=params,
        version=__version__,
        seeds=[cfg.seed] if cfg.experiment in STOCHASTIC else [],
        duration_s=round(duration, 3),
        files=files,
    )
    emit_json(manifest.as_dict(), out / "manifest.json")
    return manifest
