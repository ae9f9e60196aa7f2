"""Reading and writing dense matrices, label vectors and sidecar metadata."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import scipy.io

from .linalg import as_matrix


def read_csv_matrix(path) -> np.ndarray:
    """Dense CSV: one row per line, comma separated decimals."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: ragged rows")
    return as_matrix(np.array(rows), str(path))


def write_csv_matrix(path, A) -> None:
    A = as_matrix(A)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in A:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_mm_matrix(path) -> np.ndarray:
    """Matrix Market file in array (dense) format."""
    info = scipy.io.mminfo(path)
    if info[3] != "array":
        raise ValueError(f"{path}: expected Matrix Market array format, got {info[3]}")
    if info[4] not in ("real", "integer"):
        raise ValueError(f"{path}: unsupported field {info[4]}")
    return as_matrix(scipy.io.mmread(path), str(path))


def write_mm_matrix(path, A) -> None:
    A = as_matrix(A)
    scipy.io.mmwrite(path, A, field="real", precision=17)


def read_matrix(path) -> np.ndarray:
    """Dispatch on extension: ``.mtx``/``.mm`` is Matrix Market, else CSV."""
    suffix = Path(path).suffix.lower()
    if suffix in (".mtx", ".mm"):
        return read_mm_matrix(path)
    return read_csv_matrix(path)


def write_matrix(path, A) -> None:
    suffix = Path(path).suffix.lower()
    if suffix in (".mtx", ".mm"):
        write_mm_matrix(path, A)
    else:
        write_csv_matrix(path, A)


def write_labels(path, z) -> None:
    """Write 0-based labels as 1-based integers, one per line."""
    z = np.asarray(z, dtype=int)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(f"{int(v) + 1}\n" for v in z))


def read_labels(path) -> np.ndarray:
    """Read 1-based labels and return them 0-based."""
    vals = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            v = int(s)
            if v < 1:
                raise ValueError(f"{path}:{lineno}: labels are 1-based, got {v}")
            vals.append(v - 1)
    return np.array(vals, dtype=int)


def config_hash(payload: Any) -> str:
    """Stable SHA-256 of a JSON-serialisable payload."""
    blob = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def write_metadata(path, meta: Mapping[str, Any]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dict(meta), fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def read_metadata(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return str(obj)
