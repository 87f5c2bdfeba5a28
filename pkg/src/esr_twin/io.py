"""CSV and manifest writers.

Floats are written with ``repr`` (shortest round-trip form) so identical
arrays always give identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import platform
from pathlib import Path

import numpy as np

from . import __version__
from .sweep import Spectrum


def _f(x) -> str:
    return repr(float(x))


def spectrum_csv(spec: Spectrum) -> str:
    cols = [spec.axis1_name]
    if spec.is_2d:
        cols.append(spec.axis2_name)
    cols += ["B0_mT", "freq_GHz", "I_V", "Q_V"]
    lines = [",".join(cols)]
    if spec.is_2d:
        for i, a in enumerate(spec.axis1):
            for j, b in enumerate(spec.axis2):
                lines.append(",".join(map(_f, (a, b, spec.B0[i, j] * 1e3, spec.freq[i, j] * 1e-9,
                                               spec.I[i, j], spec.Q[i, j]))))
    else:
        for k, a in enumerate(spec.axis1):
            lines.append(",".join(map(_f, (a, spec.B0[k] * 1e3, spec.freq[k] * 1e-9,
                                           spec.I[k], spec.Q[k]))))
    return "\n".join(lines) + "\n"


def matrix_csv(spec: Spectrum) -> str:
    """Dense I matrix: rows are excitations, columns frequencies (GHz)."""
    head = ["excitation_pct\\freq_GHz"] + [_f(f * 1e-9) for f in spec.axis2]
    lines = [",".join(head)]
    for a, row in zip(spec.axis1, spec.I):
        lines.append(",".join([_f(a)] + [_f(v) for v in row]))
    return "\n".join(lines) + "\n"


def write_text(path: Path, text: str) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode("utf-8")
    path.write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def versions() -> dict:
    import scipy
    out = {"esr_twin": __version__, "python": platform.python_version(),
           "numpy": np.__version__, "scipy": scipy.__version__}
    try:
        import numba
        out["numba"] = numba.__version__
    except ImportError:
        pass
    return out


def write_manifest(path: Path, command: str, config: dict, outputs: dict, extra: dict | None = None):
    manifest = {
        "software_version": __version__,
        "command": command,
        "versions": versions(),
        "config": config,
        "outputs": outputs,
    }
    if extra:
        manifest.update(extra)
    write_text(path, json.dumps(manifest, indent=2, sort_keys=False, default=_jsonable) + "\n")
    return manifest


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float):
        return repr(obj)
    return str(obj)
