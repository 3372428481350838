"""Plain-text field snapshots (pfield v1) and branch tables.

A snapshot is one header line of ``key=value`` tokens followed by
whitespace-separated values in row-major order.  Radial files carry the mesh
as the first block; grid files carry the 0/1 domain mask after the values.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np

from .fields import CartesianField, RadialField

MAGIC = "pfield v1"
_FMT = "%.17g"


def _fmt_tuple(xs) -> str:
    return ",".join(_FMT % x if isinstance(x, float) else str(x) for x in xs)


def _block(a: np.ndarray, per_line: int = 8) -> str:
    flat = np.ravel(a)
    lines = [" ".join(_FMT % x for x in flat[i:i + per_line]) for i in range(0, flat.size, per_line)]
    return "\n".join(lines)


def format_field(f: Union[RadialField, CartesianField]) -> str:
    if isinstance(f, RadialField):
        head = (f"{MAGIC} kind=radial n={f.n} d=1 shape={f.values.size} "
                f"h={_FMT % float(np.max(np.diff(f.mesh)))} Rmax={_FMT % f.R_max} mesh=inline")
        return "\n".join([head, _block(f.mesh), _block(f.values)]) + "\n"
    R = max(abs(o) + h * (s - 1) for o, h, s in zip(f.origin, f.h, f.shape))
    head = (f"{MAGIC} kind=cartesian n={f.d} d={f.d} shape={_fmt_tuple(f.shape)} "
            f"h={_fmt_tuple(f.h)} Rmax={_FMT % R} origin={_fmt_tuple(f.origin)} mask=inline")
    if f.domain_volume is not None:
        head += f" volume={_FMT % f.domain_volume}"
    mask = " ".join("1" if m else "0" for m in np.ravel(f.mask))
    return "\n".join([head, _block(f.values), mask]) + "\n"


def write_field(path, f) -> Path:
    path = Path(path)
    path.write_text(format_field(f))
    return path


def parse_header(line: str) -> Dict[str, str]:
    if not line.startswith(MAGIC):
        raise ValueError(f"not a pfield v1 file (header {line[:20]!r})")
    out = {}
    for tok in line[len(MAGIC):].split():
        if "=" not in tok:
            raise ValueError(f"malformed header token {tok!r}")
        k, v = tok.split("=", 1)
        out[k] = v
    for k in ("kind", "n", "d", "shape", "h", "Rmax"):
        if k not in out:
            raise ValueError(f"header lacks {k}=")
    return out


def parse_field(text: str) -> Union[RadialField, CartesianField]:
    head, _, body = text.partition("\n")
    meta = parse_header(head.strip())
    nums = np.array(body.split(), dtype=float)
    shape = tuple(int(s) for s in meta["shape"].split(","))
    size = int(np.prod(shape))
    if meta["kind"] == "radial":
        if nums.size != 2 * size:
            raise ValueError(f"expected {2 * size} numbers, found {nums.size}")
        return RadialField(int(meta["n"]), nums[:size], nums[size:])
    if meta["kind"] != "cartesian":
        raise ValueError(f"unknown kind {meta['kind']!r}")
    has_mask = meta.get("mask") == "inline"
    if nums.size != size * (2 if has_mask else 1):
        raise ValueError(f"expected {size * (2 if has_mask else 1)} numbers, found {nums.size}")
    h = tuple(float(x) for x in meta["h"].split(","))
    origin = tuple(float(x) for x in meta["origin"].split(",")) if "origin" in meta else None
    mask = nums[size:].reshape(shape).astype(bool) if has_mask else None
    vol = float(meta["volume"]) if "volume" in meta else None
    return CartesianField(nums[:size].reshape(shape), h, origin, mask, vol)


def read_field(path) -> Union[RadialField, CartesianField]:
    return parse_field(Path(path).read_text())


def write_table(path, rows: Sequence[Dict[str, float]], columns: Sequence[str]) -> Path:
    """CSV with a fixed column order; non-finite numbers written as nan/inf."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])
    return path


def _cell(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_, int, np.integer)):
        return str(int(x))
    x = float(x)
    return _FMT % x if math.isfinite(x) else str(x)


def read_table(path) -> List[Dict[str, float]]:
    with Path(path).open(newline="") as fh:
        return [{k: _parse(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def _parse(v: str):
    try:
        return float(v)
    except ValueError:
        return v
