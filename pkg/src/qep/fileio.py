"""Plain-text artifact formats: portable graymaps, columnar CSV, metrics JSON.

Everything written here is byte-deterministic for a fixed input: no
timestamps, fixed float formats, sorted JSON keys.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

PGM_MAXVAL = 65535


def write_pgm(path, image: np.ndarray, lo: float | None = None,
              hi: float | None = None) -> None:
    """Write a float image as a plain (P2) graymap.

    Values are affinely mapped from [lo, hi] (default: the image range) to
    0..65535; the mapping is recorded in a comment so :func:`read_pgm` can
    restore the float scale.
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise InvalidInputError("image must be 2-d")
    lo = float(img.min()) if lo is None else float(lo)
    hi = float(img.max()) if hi is None else float(hi)
    span = hi - lo if hi > lo else 1.0
    quant = np.clip(np.rint((img - lo) / span * PGM_MAXVAL), 0, PGM_MAXVAL).astype(int)
    lines = [
        "P2",
        f"# scale lo={lo!r} hi={hi!r}",
        f"{img.shape[1]} {img.shape[0]}",
        str(PGM_MAXVAL),
    ]
    lines.extend(" ".join(str(v) for v in row) for row in quant)
    Path(path).write_text("\n".join(lines) + "\n")


def read_pgm(path) -> np.ndarray:
    """Read a P2 or P5 graymap, restoring the float scale when recorded."""
    raw = Path(path).read_bytes()
    if raw[:2] not in (b"P2", b"P5"):
        raise InvalidInputError("not a P2/P5 graymap")
    binary = raw[:2] == b"P5"
    lo = hi = None
    tokens: list[bytes] = []
    pos = 2
    # header: width, height, maxval with # comments allowed
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            end = raw.index(b"\n", pos)
            comment = raw[pos + 1 : end].decode().strip()
            if comment.startswith("scale"):
                parts = dict(p.split("=") for p in comment.split()[1:])
                lo, hi = float(parts["lo"]), float(parts["hi"])
            pos = end + 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    width, height, maxval = (int(t) for t in tokens)
    if binary:
        pos += 1  # single whitespace after maxval
        dtype = ">u2" if maxval > 255 else "u1"
        data = np.frombuffer(raw, dtype=dtype, count=width * height, offset=pos)
        img = data.astype(float).reshape(height, width)
    else:
        body = raw[pos:].split()
        img = np.array([float(v) for v in body[: width * height]]).reshape(height, width)
    if lo is not None and hi is not None:
        img = lo + img / maxval * (hi - lo)
    return img


def write_columns(path, columns: dict[str, np.ndarray]) -> None:
    """Columnar numeric text with a documented header line."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    np.savetxt(path, data, fmt="%.17g", header=" ".join(names))


def read_columns(path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().lstrip("#").split()
    data = np.atleast_2d(np.loadtxt(path))
    return {name: data[:, i] for i, name in enumerate(header)}


def write_metrics(path, metrics: dict) -> None:
    Path(path).write_text(json.dumps(metrics, sort_keys=True, indent=2) + "\n")


def read_metrics(path) -> dict:
    return json.loads(Path(path).read_text())


def write_series_csv(path, columns: dict[str, np.ndarray]) -> None:
    """Comma-separated text with a header row (time-series interchange)."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    np.savetxt(path, data, fmt="%.17g", delimiter=",",
               header=",".join(names), comments="")


def read_series_csv(path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        names = fh.readline().strip().split(",")
    data = np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))
    return {name: data[:, i] for i, name in enumerate(names)}
