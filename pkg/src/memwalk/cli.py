"""
Command-line runner.

Exit codes: 0 success, 2 config error, 3 numerical-invariant violation,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, InvariantViolation
from .experiments import DEFAULTS, ExperimentConfig, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("memwalk")


def _parse_param(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ConfigError("--param", f"expected key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="memwalk", description="Run memory-dependent random walk experiments.")
    ap.add_argument("--config", type=Path, help="JSON experiment config")
    ap.add_argument("--experiment", choices=sorted(DEFAULTS), help="experiment name (overrides config)")
    ap.add_argument("--seed", type=int, help="RNG seed for Monte Carlo runs")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--format", action="append", choices=["csv", "json", "svg"], dest="formats",
                    help="output format; repeat for several (default: all)")
    ap.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                    help="override an experiment parameter; VALUE is parsed as JSON when possible")
    ap.add_argument("--workers", type=int, help="worker processes for sweeps")
    ap.add_argument("--list", action="store_true", help="list experiments and their defaults, then exit")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def resolve_config(args) -> ExperimentConfig:
    doc: dict = {}
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc.strerror or exc}") from exc
        doc = ExperimentConfig.loads(text).to_dict()
    if args.experiment:
        if doc.get("experiment") not in (None, args.experiment):
            doc["params"] = {}
        doc["experiment"] = args.experiment
    if "experiment" not in doc:
        raise ConfigError("experiment", "give --experiment or a config file naming one")
    params = dict(doc.get("params", {}))
    for item in args.param:
        key, value = _parse_param(item)
        params[key] = value
    doc["params"] = params
    for name in ("seed", "out", "workers"):
        v = getattr(args, name)
        if v is not None:
            doc[name] = v
    if args.formats:
        doc["formats"] = args.formats
    return ExperimentConfig.from_dict(doc)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.list:
        print(json.dumps(DEFAULTS, indent=2))
        return EXIT_OK
    try:
        cfg = resolve_config(args)
        manifest = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"numerical invariant violated ({exc.invariant}): {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for f in manifest.files:
        print(f"{f['sha256'][:12]}  {Path(cfg.out) / f['path']}")
    print(f"wrote {len(manifest.files)} files + manifest.json in {manifest.duration_s:.2f}s")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
