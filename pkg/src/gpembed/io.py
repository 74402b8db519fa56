"""CSV formats for clouds, embeddings and kernels.

Every file is UTF-8 with LF line endings.  Leading ``# key: value`` lines
carry metadata, then one header row, then data rows.  Floats are written
with ``repr`` (shortest round-trip form), so reading a file back restores
the exact doubles.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .embed import Embedding
from .errors import InputError
from .kernel import PointCloud


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _write_text(path, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def format_table(meta: Dict[str, object], header: Sequence[str],
                 rows: Iterable[Sequence[object]]) -> str:
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {'' if value is None else value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def read_table(path) -> Tuple[Dict[str, str], List[str], List[List[str]]]:
    meta: Dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    body_start = 0
    for line in lines:
        if not line.startswith("#"):
            break
        key, _, value = line[1:].partition(":")
        meta[key.strip()] = value.strip()
        body_start += 1
    rows = list(csv.reader([ln for ln in lines[body_start:] if ln != ""]))
    if not rows:
        raise InputError(f"{path}: missing header row")
    return meta, rows[0], rows[1:]


def _float_matrix(rows, width, path) -> np.ndarray:
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric entry ({exc})") from None
    if data.size == 0:
        return np.zeros((0, width))
    if data.ndim != 2 or data.shape[1] != width:
        raise InputError(f"{path}: ragged rows, expected {width} columns")
    return data


def cloud_to_csv(cloud: PointCloud) -> str:
    header = [f"x{i + 1}" for i in range(cloud.dim)]
    return format_table({"label": cloud.label, "seed": cloud.seed}, header, cloud.points)


def write_cloud(cloud: PointCloud, path):
    _write_text(path, cloud_to_csv(cloud))


def read_cloud(path) -> PointCloud:
    meta, header, rows = read_table(path)
    pts = _float_matrix(rows, len(header), path)
    seed = meta.get("seed") or None
    return PointCloud(pts, meta.get("label", Path(path).stem), int(seed) if seed else None)


def embedding_to_csv(emb: Embedding, **extra) -> str:
    meta = {"method": emb.method, "k": emb.k, "power": fmt(emb.power), "seed": emb.seed}
    meta.update(extra)
    header = [f"y{i + 1}" for i in range(emb.k)]
    return format_table(meta, header, emb.coords)


def write_embedding(emb: Embedding, path, **extra):
    _write_text(path, embedding_to_csv(emb, **extra))


def read_embedding(path) -> Embedding:
    meta, header, rows = read_table(path)
    coords = _float_matrix(rows, len(header), path)
    seed = meta.get("seed") or None
    power = float(meta.get("power", "1"))
    return Embedding(coords, meta["method"], power, int(seed) if seed else None)


def write_matrix(entries, path, **meta):
    m = np.asarray(entries)
    header = [f"c{i + 1}" for i in range(m.shape[1])]
    _write_text(path, format_table(meta, header, m))


def read_matrix(path) -> np.ndarray:
    _, header, rows = read_table(path)
    return _float_matrix(rows, len(header), path)
