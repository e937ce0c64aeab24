"""Deterministic run outputs: CSV tables and the run manifest.

The CSV format is the bit-exact contract with the plotting component:
comma delimiter, header row, '.' decimal separator, floats at 17
significant digits so every float64 round-trips.  Manifests are YAML
with sorted keys and carry the resolved config, the derived physical
scales, a column inventory of every written file and the experiment's
scalar results; nothing time- or host-dependent goes in, so reruns of
the same config are byte-identical.
"""

import math
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .backend import BACKEND
from .config import RunConfig

MANIFEST_NAME = "manifest.yaml"


def fmt(x: float) -> str:
    """One float64 as text, round-trip exact."""
    return f"{float(x):.17g}"


def write_csv(path, header: Sequence[str], columns: Sequence[np.ndarray]) -> int:
    """Write aligned columns; returns the number of data rows."""
    columns = [np.asarray(c) for c in columns]
    if len(columns) != len(header):
        raise ValueError(f"{len(header)} header fields but {len(columns)} columns")
    n_rows = columns[0].shape[0] if columns else 0
    for name, col in zip(header, columns):
        if col.ndim != 1 or col.shape[0] != n_rows:
            raise ValueError(f"column {name!r} is not a 1-d array of length {n_rows}")
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n_rows):
            fh.write(",".join(fmt(col[i]) for col in columns) + "\n")
    return n_rows


def read_csv(path) -> Dict[str, np.ndarray]:
    """Read a CSV written by write_csv back into named columns."""
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        return {name: np.empty(0) for name in header}
    return {name: data[:, j] for j, name in enumerate(header)}


def resolve_out_dir(out_flag: Optional[str], config_path) -> Path:
    """Output directory: --out flag, else $WAVY_FILM_OUT/<config stem>,
    else ./runs/<config stem>."""
    if out_flag:
        return Path(out_flag)
    root = os.environ.get("WAVY_FILM_OUT")
    stem = Path(config_path).stem
    if root:
        return Path(root) / stem
    return Path("runs") / stem


class RunWriter:
    """Collects output files and result scalars, then emits the manifest."""

    def __init__(self, out_dir: Path, config: RunConfig):
        self.out_dir = Path(out_dir)
        self.config = config
        self.outputs: Dict[str, Dict[str, Any]] = {}
        self.results: Dict[str, Any] = {}

    def add_table(self, name: str, header: Sequence[str],
                  columns: Sequence[np.ndarray], units: Optional[Dict[str, str]] = None):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        rows = write_csv(self.out_dir / name, header, columns)
        entry: Dict[str, Any] = {"columns": list(header), "rows": rows}
        if units:
            entry["units"] = dict(units)
        self.outputs[name] = entry

    def finish(self) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        manifest = {
            "version": __version__,
            "backend": BACKEND,
            "experiment": self.config.experiment,
            "model": self.config.model,
            "config": _plain(self.config.resolved),
            "derived": _plain(derived_scales(self.config)),
            "outputs": _plain(self.outputs),
            "results": _plain(self.results),
        }
        path = self.out_dir / MANIFEST_NAME
        with open(path, "w") as fh:
            yaml.safe_dump(manifest, fh, sort_keys=True, default_flow_style=False)
        return path


def derived_scales(config: RunConfig) -> Dict[str, Any]:
    """Nondimensional groups plus physical scales when a fluid anchors them."""
    p = config.params
    out: Dict[str, Any] = {
        "alpha_deg": math.degrees(p.alpha),
        "delta": p.delta,
        "zeta": p.zeta,
        "xi": p.xi,
        "Bi": p.Bi,
        "R": p.R,
        "cot_alpha": p.cot_alpha,
    }
    if p.fluid is not None:
        out["h_hat_mm"] = p.h_hat
        out["u_mean_mm_per_s"] = p.u_mean
        out["t_scale_s"] = p.t_scale
        out["a_hat_mm"] = p.a_hat
    else:
        out["h_hat_mm"] = None
        out["u_mean_mm_per_s"] = None
        out["t_scale_s"] = None
        out["a_hat_mm"] = None
    return out


def load_manifest(run_dir) -> Dict[str, Any]:
    with open(Path(run_dir) / MANIFEST_NAME) as fh:
        return yaml.safe_load(fh)


def _plain(obj):
    """Recursively strip numpy scalar/array types for clean YAML."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    return obj
