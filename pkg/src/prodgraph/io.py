"""File formats: adjacency CSV, edge-list TSV, PGTN tensors, manifests, configs.

PGTN layout (all little-endian)::

    b"PGTN" | u32 version | u32 K | K x u64 dims | prod(dims) x f64 (mode-0 fastest)

A signal batch ``(M, n_0, ..., n_{K-1})`` is stored as the order-``K+1``
tensor ``(n_0, ..., n_{K-1}, M)``; the last mode indexes observations.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import os
import struct
import tempfile
from datetime import datetime, timezone
from math import prod
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import DimensionError, GraphError
from .graph import GraphLike, WeightedAdjacency, as_matrix

PGTN_MAGIC = b"PGTN"
PGTN_VERSION = 1

PathLike = Union[str, os.PathLike]


class FormatError(ValueError):
    """Malformed input file."""


def atomic_write(path: PathLike, data: Union[bytes, str]) -> Path:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256_file(path: PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# matrices


def _matrix_text(A: np.ndarray) -> str:
    buf = _io.StringIO()
    np.savetxt(buf, np.atleast_2d(A), delimiter=",", fmt="%.17g")
    return buf.getvalue()


def write_matrix_csv(path: PathLike, A: np.ndarray) -> Path:
    return atomic_write(path, _matrix_text(np.asarray(A, dtype=float)))


def read_matrix_csv(path: PathLike) -> np.ndarray:
    try:
        A = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return A


def write_adjacency_csv(path: PathLike, W: GraphLike) -> Path:
    return write_matrix_csv(path, as_matrix(W))


def read_adjacency_csv(path: PathLike) -> WeightedAdjacency:
    A = read_matrix_csv(path)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{path}: adjacency must be square, got {A.shape}")
    return WeightedAdjacency.from_matrix(A)


def write_edge_list(path: PathLike, W: GraphLike, threshold: float = 0.0) -> Path:
    """``i<TAB>j<TAB>weight`` per edge, 1-based, ``i < j``; first line is ``# n=<n>``."""
    A = as_matrix(W)
    lines = [f"# n={A.shape[0]}"]
    i, j = np.triu_indices(A.shape[0], k=1)
    keep = A[i, j] > threshold
    lines += [f"{a + 1}\t{b + 1}\t{A[a, b]:.17g}" for a, b in zip(i[keep], j[keep])]
    return atomic_write(path, "\n".join(lines) + "\n")


def read_edge_list(path: PathLike, n: int | None = None) -> WeightedAdjacency:
    """Inverse of :func:`write_edge_list`; ``n`` overrides the header (or the max index)."""
    edges = []
    header_n = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line[1:].strip().startswith("n="):
                    header_n = int(line[1:].strip()[2:])
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 tab-separated fields")
            a, b, w = int(parts[0]), int(parts[1]), float(parts[2])
            if not 1 <= a < b:
                raise FormatError(f"{path}:{lineno}: need 1 <= i < j, got {a}, {b}")
            edges.append((a - 1, b - 1, w))
    size = n or header_n or (max(b for _, b, _ in edges) + 1 if edges else 0)
    if size < 1:
        raise GraphError(f"{path}: cannot infer the number of nodes")
    W = np.zeros((size, size))
    for a, b, w in edges:
        if b >= size:
            raise FormatError(f"{path}: node {b + 1} exceeds n={size}")
        W[a, b] = W[b, a] = w
    return WeightedAdjacency.from_matrix(W)


# ---------------------------------------------------------------------------
# PGTN tensors


def encode_pgtn(T: np.ndarray) -> bytes:
    T = np.asarray(T, dtype="<f8")
    if T.ndim < 1:
        raise DimensionError("PGTN needs a tensor of order at least 1")
    head = PGTN_MAGIC + struct.pack("<II", PGTN_VERSION, T.ndim)
    head += struct.pack(f"<{T.ndim}Q", *T.shape)
    return head + T.ravel(order="F").tobytes()


def decode_pgtn(data: bytes) -> np.ndarray:
    if data[:4] != PGTN_MAGIC:
        raise FormatError("not a PGTN file (bad magic)")
    if len(data) < 12:
        raise FormatError("truncated PGTN header")
    version, K = struct.unpack_from("<II", data, 4)
    if version != PGTN_VERSION:
        raise FormatError(f"unsupported PGTN version {version}")
    off = 12 + 8 * K
    if len(data) < off:
        raise FormatError("truncated PGTN header")
    dims = struct.unpack_from(f"<{K}Q", data, 12)
    count = prod(dims)
    if len(data) != off + 8 * count:
        raise FormatError(f"PGTN payload has {len(data) - off} bytes, expected {8 * count}")
    flat = np.frombuffer(data, dtype="<f8", count=count, offset=off)
    return flat.reshape(dims, order="F").astype(float)


def write_pgtn(path: PathLike, T: np.ndarray) -> Path:
    return atomic_write(path, encode_pgtn(T))


def read_pgtn(path: PathLike) -> np.ndarray:
    return decode_pgtn(Path(path).read_bytes())


def write_signals_pgtn(path: PathLike, X: np.ndarray) -> Path:
    """Store a signal batch ``(M, n_0, ...)`` with observations on the last mode."""
    X = np.asarray(X, dtype=float)
    if X.ndim < 2:
        raise DimensionError("signal batch needs shape (M, n_0, ...)")
    return write_pgtn(path, np.moveaxis(X, 0, -1))


def read_signals_pgtn(path: PathLike) -> np.ndarray:
    T = read_pgtn(path)
    if T.ndim < 2:
        raise DimensionError(f"{path}: a signal tensor needs an observation mode")
    return np.moveaxis(T, -1, 0)


def write_signals_csv(path: PathLike, X: np.ndarray) -> Path:
    """Rows are observations (vectorized signals)."""
    X = np.asarray(X, dtype=float)
    return write_matrix_csv(path, X.reshape(X.shape[0], -1, order="F"))


def read_signals(path: PathLike) -> np.ndarray:
    """Signal batch from a ``.pgtn`` file or a CSV with one observation per row."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == PGTN_MAGIC:
        return read_signals_pgtn(path)
    return read_matrix_csv(path)


# ---------------------------------------------------------------------------
# metrics, configs, manifests


def write_rows_csv(path: PathLike, rows: Iterable[Mapping[str, Any]], columns: Sequence[str]) -> Path:
    """CSV with a header in the fixed ``columns`` order."""
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), extrasaction="raise", lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _fmt(r.get(k, "")) for k in columns})
    return atomic_write(path, buf.getvalue())


def read_rows_csv(path: PathLike) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return v


def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise FormatError(f"config line {lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


def read_config(path: PathLike) -> dict[str, str]:
    return parse_config_text(Path(path).read_text())


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (tuple, set)):
        return list(v)
    if hasattr(v, "value"):
        return v.value
    raise TypeError(f"cannot serialize {type(v).__name__}")


def write_manifest(path: PathLike, manifest: Mapping[str, Any]) -> Path:
    return atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n")


def read_manifest(path: PathLike) -> dict:
    return json.loads(Path(path).read_text())
