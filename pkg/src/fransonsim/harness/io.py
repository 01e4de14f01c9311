"""Run directories: config echo, per-case trace CSVs, metrics and manifest."""
from __future__ import annotations

import csv
import json
import os
import platform
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np
import scipy

from .. import __version__
from .counts import RNG_ALGORITHM, CorrectedTrace, NoisyTrace
from .scenarios import RunResult


def _clean(obj):
    """Make numpy scalars and tuples JSON-friendly."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")


def write_trace_csv(path: Path, tau, r_norm, counts: Optional[NoisyTrace] = None,
                    corrected: Optional[CorrectedTrace] = None) -> None:
    header = ["tau_fs", "R_norm"]
    cols = [tau, r_norm]
    if counts is not None:
        header += ["R_counts_per_s", "R_err"]
        cols += [counts.rate, counts.error]
    if corrected is not None:
        header += ["R_corrected_per_s", "R_corrected_err"]
        cols += [corrected.rate, corrected.error]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([f"{x:.10g}" for x in row])


def manifest_schema() -> dict:
    return json.loads(resources.files("fransonsim").joinpath("data/manifest.schema.json").read_text())


def _created() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    ts = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return ts.isoformat(timespec="seconds")


def build_manifest(result: RunResult, files: list[str], seed: Optional[int] = None) -> dict:
    data = json.loads(resources.files("fransonsim").joinpath("data/materials.json").read_text())
    manifest = {
        "schema_version": 1,
        "run": result.name,
        "created": _created(),
        "versions": {
            "fransonsim": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
            "materials_data": data["version"],
        },
        "rng": {"algorithm": RNG_ALGORITHM, "seed": seed},
        "files": sorted(files),
        "cases": list(result.cases),
    }
    jsonschema.validate(manifest, manifest_schema())
    return manifest


def write_run(result: RunResult, out_dir, noisy: Optional[dict] = None,
              corrected: Optional[dict] = None, seed: Optional[int] = None,
              extra: Optional[dict] = None) -> Path:
    """Persist *result* under *out_dir*; returns the directory.

    *noisy* / *corrected* map case labels to count-simulation outputs, which
    add columns to that case's CSV.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = ["config.json", "metrics.json"]
    write_json(out / "config.json", result.config.to_dict())
    for label, case in result.cases.items():
        name = f"case_{label}.csv"
        write_trace_csv(out / name, case.trace.tau, case.trace.rate,
                        (noisy or {}).get(label), (corrected or {}).get(label))
        files.append(name)
    metrics = {"run": result.name, "cases": result.metrics(), "summary": result.summary}
    if extra:
        metrics.update(extra)
    write_json(out / "metrics.json", metrics)
    write_json(out / "manifest.json", build_manifest(result, files, seed))
    return out
