"""Command line entry point.

    mbq <scenario> [--config file.json] [--set key=value ...] [--out dir] [--jobs N]

Exit codes: 0 success, 2 usage or configuration error, 3 numerical tolerance
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import experiments as ex
from . import numerics
from .config import SCENARIOS, ConfigError, RunConfig, load_config
from .numerics import NumericalError
from .observables import FitError
from .output import default_output_root, write_result

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("mbq")


def run_scenario(cfg: RunConfig) -> ex.ScanResult:
    p, s = cfg.params(), cfg.settings()
    name = cfg.scenario
    analyse = cfg["scan.analyse"]
    if name == "spectrum":
        return ex.run_spectrum(p, cfg.grid("phi"), s.charge_mode)
    if name == "iv":
        return ex.run_iv_narrow(p, cfg.grid("mu2"), cfg["scan.iv_width"], s)
    if name == "flux":
        return ex.run_flux_sweep(p, cfg.grid("phi"), cfg["scan.lambda0_list"], s)
    if name == "temperature":
        return ex.run_temperature_sweep(p, cfg.grid("phi"), cfg["scan.T_list"], s,
                                        lambda0=cfg["scan.temperature_lambda0"])
    if name == "transient":
        return ex.run_readout_transient(p, cfg.grid("t"), s, analyse=analyse)
    if name == "dephasing":
        return ex.run_dephasing(p, cfg.grid("dephasing_t"), cfg["scan.dephasing_lambda0_list"], s,
                                analyse=analyse)
    if name in ("correlation", "psd"):
        return ex.run_correlation_psd(p, cfg.grid("t"), cfg.grid("omega"), cfg["scan.variants"],
                                      s, what=(name,), analyse=analyse)
    if name == "ng-map":
        return ex.run_ng_flux_map(p, cfg.grid("ng"), cfg.grid("map_phi"), s)
    if name == "detuning":
        return ex.run_dot_detuning(p, cfg.grid("eps"), cfg["scan.detuning_pattern"], s)
    if name == "liouvillian-spectrum":
        return ex.run_liouvillian_spectrum(p, s)
    raise ConfigError(f"unknown scenario {name!r}")  # pragma: no cover


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mbq", description="Majorana box qubit transport runs.")
    ap.add_argument("scenario", choices=SCENARIOS)
    ap.add_argument("--config", help="JSON config file (a run manifest also works)")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override one dotted config key, e.g. params.lambda0=0.02")
    ap.add_argument("--out", help="output directory (default: $MBQ_OUT/<scenario>)")
    ap.add_argument("--jobs", type=int, help="worker processes for parameter grids")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = list(args.overrides)
    if args.jobs is not None:
        overrides.append(("run.jobs", args.jobs))
    try:
        cfg = load_config(args.scenario, args.config, overrides)
    except ConfigError as exc:
        print(f"mbq: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    outdir = Path(args.out) if args.out else default_output_root() / args.scenario
    saved_tol = replace(numerics.TOL)
    numerics.TOL.__dict__.update(cfg.tolerances().__dict__)
    t0 = time.perf_counter()
    result, error, code = None, None, EXIT_OK
    try:
        result = run_scenario(cfg)
        if not result.ok:
            code = EXIT_NUMERICAL
    except (NumericalError, FitError, ArithmeticError) as exc:
        error, code = f"{type(exc).__name__}: {exc}", EXIT_NUMERICAL
    except ConfigError as exc:
        print(f"mbq: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        numerics.TOL.__dict__.update(saved_tol.__dict__)
    wall = time.perf_counter() - t0

    try:
        manifest = write_result(result, outdir, config=cfg.values, provenance=cfg.provenance,
                                scenario=cfg.scenario, wall_time=wall, error=error)
    except OSError as exc:
        print(f"mbq: cannot write output to {outdir}: {exc}", file=sys.stderr)
        return EXIT_IO

    for w in manifest.get("warnings", []):
        log.warning(w)
    if code == EXIT_NUMERICAL:
        print(f"mbq: {cfg.scenario} failed numerical checks:", file=sys.stderr)
        for msg in ([error] if error else result.failures):
            print(f"  {msg}", file=sys.stderr)
    else:
        log.info("wrote %d file(s) to %s in %.1f s", len(manifest["files"]), outdir, wall)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
