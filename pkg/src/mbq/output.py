"""CSV tables and the JSON run manifest.

Floats are written with Python's shortest round-trip representation (at most
17 significant digits), UTF-8, LF line endings, so identical numbers always
give identical bytes.
"""

from __future__ import annotations

import json
import math
import os
import re
import subprocess
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import ScanResult, Table

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1
PARTIAL_SUFFIX = ".partial"

UNITS = {"energy": "E_C", "time": "hbar/E_C", "current": "e*E_C/hbar",
         "noise": "e^2*E_C/hbar", "phase": "rad"}


def format_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._=\-\[\],]", "_", name).replace(",", "_")


def write_csv(path, table: Table) -> Path:
    path = Path(path)
    lines = [",".join(table.columns)]
    lines += [",".join(format_float(v) for v in row) for row in table.data]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv(path) -> Table:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        rows = [[float(v) for v in line.rstrip("\n").split(",")] for line in fh if line.strip()]
    return Table(header, np.array(rows, dtype=float).reshape(len(rows), len(header)))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.complexfloating, complex)):
        return [float(obj.real), float(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def version_string() -> str:
    """Package version, extended by ``git describe`` when run from a checkout."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def diagnostics_summary(result: ScanResult) -> dict:
    summary = {}
    for name, diag in result.diagnostics.items():
        entry = {}
        for key, val in diag.items():
            arr = np.asarray(val, dtype=float)
            if arr.size == 0 or np.all(np.isnan(arr)):
                continue
            if key in ("zero_mode_gap", "rcond", "min_eigenvalue"):
                entry[f"min_{key}"] = float(np.nanmin(arr))
            elif key in ("mu1", "mu2"):
                entry[f"range_{key}"] = [float(np.nanmin(arr)), float(np.nanmax(arr))]
            else:
                entry[f"max_{key}"] = float(np.nanmax(arr))
        summary[name] = entry
    return summary


def write_result(result: ScanResult | None, outdir, *, config: dict, provenance: dict,
                 scenario: str, wall_time: float, error: str | None = None) -> dict:
    """Write every table of ``result`` plus one manifest into ``outdir``.

    Tables get a ``.partial`` suffix when the run had tolerance failures or
    raised; the manifest is always written and lists every file.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    failed = error is not None or (result is not None and not result.ok)
    files = []
    if result is not None:
        for name, table in result.tables.items():
            fname = safe_name(name) + ".csv" + (PARTIAL_SUFFIX if failed else "")
            write_csv(outdir / fname, table)
            files.append({"name": fname, "table": name, "columns": list(table.columns),
                          "rows": int(table.data.shape[0])})
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "scenario": scenario,
        "status": "error" if error else ("tolerance-failure" if failed else "ok"),
        "version": version_string(),
        "wall_time_s": round(float(wall_time), 3),
        "config": config,
        "provenance": provenance,
        "files": files,
        "units": UNITS,
        "conventions": {
            "vectorization": "column stacking",
            "current_sign": "positive for electrons leaving a dot into its reservoir",
            "noise": "S(w) = 2 Re[C(w) + C(-w)], no self-correlation term",
            "csv_float_format": "shortest round-trip repr, <= 17 significant digits",
        },
    }
    if result is not None:
        manifest["params"] = result.params.to_dict()
        manifest["grids"] = {k: np.asarray(v).tolist() for k, v in result.axes.items()}
        manifest["diagnostics"] = diagnostics_summary(result)
        manifest["results"] = result.extras
        manifest["failures"] = result.failures
        manifest["warnings"] = result.warnings
    if error:
        manifest["error"] = error
    with open(outdir / MANIFEST_NAME, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(manifest))
    return manifest


def default_output_root() -> Path:
    return Path(os.environ.get("MBQ_OUT", "mbq_out"))
