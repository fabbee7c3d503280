"""CSV / PGM artifact writers and the snapshot reader.

Snapshot CSV::

    # component=v_x time=0.00035 nx=201 ny=201 dx=0.05 dy=0.05 origin=0,0
    x,y,value
    ...

Rows follow the array's row-major order (x index outer). Floats are
written with ``repr`` so identical arrays give identical bytes.
"""

from __future__ import annotations

import re
from collections.abc import Iterable
from pathlib import Path

import numpy as np

from .postprocess import ScalarField2D


def _f(x: float) -> str:
    return repr(float(x))


def write_snapshot(path: Path, f: ScalarField2D, labels: tuple[str, str] = ("x", "y"), extra: str = "") -> Path:
    x, y = f.coords()
    header = (
        f"# component={f.name} time={_f(f.time)} nx={f.nx} ny={f.ny} "
        f"dx={_f(f.dx)} dy={_f(f.dy)} origin={_f(f.origin[0])},{_f(f.origin[1])}"
    )
    if extra:
        header += " " + extra
    lines = [header, f"{labels[0]},{labels[1]},value"]
    for i in range(f.nx):
        xi = _f(x[i])
        lines.extend(f"{xi},{_f(y[j])},{_f(f.values[i, j])}" for j in range(f.ny))
    path.write_text("\n".join(lines) + "\n")
    return path


_HEADER = re.compile(r"(\w+)=(\S+)")


def read_snapshot(path: Path) -> ScalarField2D:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("#"):
        raise ValueError(f"{path}: missing snapshot header line")
    meta = dict(_HEADER.findall(text[0]))
    try:
        nx, ny = int(meta["nx"]), int(meta["ny"])
        dx, dy = float(meta["dx"]), float(meta["dy"])
        x0, y0 = (float(v) for v in meta["origin"].split(","))
    except KeyError as exc:
        raise ValueError(f"{path}: header lacks {exc.args[0]!r}") from None
    rows = [line for line in text[2:] if line.strip()]
    if len(rows) != nx * ny:
        raise ValueError(f"{path}: expected {nx * ny} data rows, found {len(rows)}")
    values = np.array([float(r.rsplit(",", 1)[1]) for r in rows]).reshape(nx, ny)
    return ScalarField2D(values, dx, dy, (x0, y0), name=meta.get("component", "value"),
                         time=float(meta.get("time", 0.0)))


def write_series(path: Path, header: str, rows: Iterable[Iterable[float]]) -> Path:
    lines = [header] + [",".join(_f(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_pgm(path: Path, values: np.ndarray) -> tuple[Path, Path]:
    """8-bit binary PGM with min-max scaling; the scale goes to ``<path>.txt``."""
    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    scaled = np.zeros_like(v) if hi == lo else (v - lo) / (hi - lo) * 255.0
    # image rows run from +y down to -y
    img = np.flipud(np.rint(scaled).astype(np.uint8).T)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())
    side = path.with_name(path.name + ".txt")
    side.write_text(f"min={_f(lo)}\nmax={_f(hi)}\nscale=linear\n")
    return path, side
