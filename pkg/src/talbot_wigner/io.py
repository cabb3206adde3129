"""Deterministic file formats: CSV matrices, PGM renders, JSON sidecars."""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Sequence

import numpy as np


def fmt(v: float) -> str:
    """Locale-free decimal with 9 significant digits."""
    return format(float(v), ".9g")


def write_matrix_csv(path: Path, corner: str, columns: Sequence[float], rows: Sequence[float],
                     values: np.ndarray) -> None:
    """Row 0: ``corner`` then the column axis; every later row: its axis value then the cells."""
    values = np.asarray(values, dtype=float)
    if values.shape != (len(rows), len(columns)):
        raise ValueError(f"matrix shape {values.shape} does not match axes ({len(rows)}, {len(columns)})")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([corner] + [fmt(c) for c in columns])
        for r, line in zip(rows, values):
            w.writerow([fmt(r)] + [fmt(v) for v in line])


def read_matrix_csv(path: Path) -> tuple[str, np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of ``write_matrix_csv``: (corner, columns, rows, values)."""
    with open(path, newline="") as fh:
        table = list(csv.reader(fh))
    if len(table) < 2:
        raise ValueError(f"{path}: matrix CSV needs a header and at least one row")
    corner, columns = table[0][0], np.array(table[0][1:], dtype=float)
    body = np.array(table[1:], dtype=float)
    return corner, columns, body[:, 0], body[:, 1:]


def write_columns_csv(path: Path, header: Sequence[str], *cols: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for cells in zip(*cols):
            w.writerow([fmt(c) for c in cells])


def _round_half_away(v: np.ndarray) -> np.ndarray:
    return np.sign(v) * np.floor(np.abs(v) + 0.5)


def gray_levels(values: np.ndarray, symmetric: bool) -> np.ndarray:
    """Map to 0..255 by the global maximum; ``symmetric`` puts 0 at mid-gray over [-|v|max, |v|max]."""
    v = np.asarray(values, dtype=float)
    if symmetric:
        scale = np.abs(v).max()
        g = 127.5 * (1 + v / scale) if scale > 0 else np.full(v.shape, 127.5)
    else:
        scale = v.max()
        g = 255 * v / scale if scale > 0 else np.zeros(v.shape)
    return np.clip(_round_half_away(g), 0, 255).astype(np.uint8)


def write_pgm(path: Path, values: np.ndarray, symmetric: bool = False) -> None:
    """Binary 8-bit PGM; the first matrix row becomes the top image row."""
    img = gray_levels(values, symmetric)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path: Path) -> np.ndarray:
    data = Path(path).read_bytes()
    head = data.split(b"\n", 3)
    if head[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h = map(int, head[1].split())
    return np.frombuffer(head[3], dtype=np.uint8).reshape(h, w)


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
