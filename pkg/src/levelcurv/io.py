"""File formats: support-slice CSV tables, boundary descriptions, run configs.

All writers go through :func:`atomic_write`, which writes a temporary file
in the target directory and renames it into place.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .numerics import fourier_resample
from .support_geometry import (SupportSlice, build_grid, circle_support,
                               ellipse_support)

FLOAT_FMT = "%.17g"


# --------------------------------------------------------------------------
# atomic output
# --------------------------------------------------------------------------

def atomic_write(path, data: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % v
    return str(v)


def write_csv(path, header, rows) -> Path:
    """RFC-4180 CSV with a header row; floats carry 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return atomic_write(path, buf.getvalue())


def read_csv(path) -> tuple:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV file")
    header = [h.strip() for h in rows[0]]
    data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    return header, data.reshape(-1, len(header))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, obj) -> Path:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False)
    return atomic_write(path, text + "\n")


# --------------------------------------------------------------------------
# support slices
# --------------------------------------------------------------------------

def slice_columns(dim_n: int) -> list:
    return ["theta", "h"] if dim_n == 2 else ["polar", "azimuth", "h"]


def save_slice_csv(path, slc: SupportSlice) -> Path:
    grid = slc.grid
    coords = [c.ravel() for c in np.meshgrid(*grid.coords, indexing="ij")]
    rows = zip(*coords, np.ravel(slc.h))
    return write_csv(path, slice_columns(grid.dim_n), rows)


def load_slice_csv(path) -> SupportSlice:
    """Read a slice written by :func:`save_slice_csv`.

    Two columns (theta, h) give a planar slice, three (polar, azimuth, h)
    a slice on the 2-sphere; nodes must form the grid that
    :func:`build_grid` produces.
    """
    header, data = read_csv(path)
    if header == slice_columns(2):
        grid = build_grid(2, data.shape[0])
        order = np.argsort(data[:, 0] % (2 * np.pi), kind="stable")
        theta, h = data[order, 0], data[order, 1]
        if not np.allclose(theta, grid.coords[0], atol=1e-12):
            raise ValueError(f"{path}: theta column is not a uniform grid of [0, 2pi)")
        return SupportSlice(grid, h)
    if header == slice_columns(3):
        M = int(round(math.sqrt(data.shape[0] / 2)))
        grid = build_grid(3, M)
        if data.shape[0] != M * 2 * M:
            raise ValueError(f"{path}: expected an M x 2M latitude-longitude grid")
        h = data[:, 2].reshape(grid.shape)
        return SupportSlice(grid, h)
    raise ValueError(f"{path}: unrecognized header {header}")


def parse_boundary(text: str, n_theta: int, base_dir=None) -> np.ndarray:
    """Support samples on a uniform theta grid from a boundary description.

    Accepted forms: ``circle cx cy r``, ``ellipse a b`` (optionally followed
    by ``cx cy angle``) or the path of a planar slice CSV, which is
    Fourier-resampled when its node count differs from ``n_theta``.
    """
    words = text.split()
    if not words:
        raise ValueError("empty boundary description")
    theta = build_grid(2, n_theta).coords[0]
    kind = words[0].lower()
    if kind in ("circle", "ellipse"):
        try:
            nums = [float(w) for w in words[1:]]
        except ValueError as exc:
            raise ValueError(f"bad number in boundary {text!r}") from exc
        if kind == "circle":
            if len(nums) != 3:
                raise ValueError("circle needs: circle cx cy r")
            cx, cy, r = nums
            if r <= 0:
                raise ValueError("circle radius must be positive")
            return circle_support(theta, r, (cx, cy))
        if len(nums) not in (2, 5):
            raise ValueError("ellipse needs: ellipse a b [cx cy angle]")
        a, b = nums[:2]
        if a <= 0 or b <= 0:
            raise ValueError("ellipse semi-axes must be positive")
        cx, cy, ang = nums[2:] if len(nums) == 5 else (0.0, 0.0, 0.0)
        return ellipse_support(theta, a, b, (cx, cy), ang)
    path = Path(text.strip())
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    if not path.exists():
        raise FileNotFoundError(f"boundary file not found: {path}")
    slc = load_slice_csv(path)
    if slc.grid.dim_n != 2:
        raise ValueError(f"{path}: ring boundaries must be planar slices")
    h = slc.h
    return h if h.size == n_theta else fourier_resample(h, n_theta)


# --------------------------------------------------------------------------
# run configuration
# --------------------------------------------------------------------------

def load_config(path=None, overrides=(), section: str = "run") -> dict:
    """Key-value configuration as a flat dict of strings.

    The file is INI-style; keys outside any section belong to ``[run]``.
    ``overrides`` are ``key=value`` strings applied last.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        if not text.lstrip().startswith("["):
            text = f"[{section}]\n" + text
        cp.read_string(text, source=str(path))
    values = dict(cp[section]) if cp.has_section(section) else {}
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form key=value")
        k, v = item.split("=", 1)
        values[k.strip()] = v.strip()
    return values
