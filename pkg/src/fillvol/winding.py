"""Codimension-1 filling oracle in the unit square.

A closed polygonal 1-cycle in [0,1]^2 has winding function ``w``; its fillings
relative to the boundary are ``w + c`` for integer ``c``, so the filling
volume is ``min_c integral |w + c|``. The integral is rasterised on cell
centres of an ``h``-grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chains import PolyCycle
from .models import _as_generator

MAX_JITTERS = 100


class WindingDegeneracy(ArithmeticError):
    pass


@dataclass(frozen=True)
class WindingGrid:
    h: float
    values: np.ndarray  # values[row, col] at centre ((col + 1/2) h, (row + 1/2) h)
    offset: float = 0.0  # vertical shift applied to the scanlines


def _check_cycle(Z: PolyCycle, h: float) -> int:
    if Z.n != 2 or Z.k != 1:
        raise ValueError("winding oracle needs a 1-cycle in [0,1]^2")
    m = int(round(1.0 / h))
    if abs(m * h - 1.0) > 1e-12 or h > 1.0 / 16:
        raise ValueError("h must be 1/m with m >= 16")
    return m


def winding_function(Z: PolyCycle, h: float, rng=None) -> WindingGrid:
    """Signed crossing counts of rays from the left edge, at cell centres.

    A segment crossing the scanline downward at abscissa X adds +1 to every
    centre right of X (counter-clockwise loops wind +1). If a scanline passes
    through a vertex ordinate, all scanlines are shifted by a tiny jitter and
    recomputed.
    """
    m = _check_cycle(Z, h)
    if len(Z) == 0:
        return WindingGrid(h, np.zeros((m, m), dtype=np.int64))
    # a negative coefficient swaps the endpoints
    flip = (Z.coefs < 0)[:, None]
    a = np.where(flip, Z.verts[:, 1, :], Z.verts[:, 0, :])
    b = np.where(flip, Z.verts[:, 0, :], Z.verts[:, 1, :])
    g = _as_generator(rng if rng is not None else 0)
    offset = 0.0
    for _ in range(MAX_JITTERS + 1):
        grid = _raster(a, b, m, h, offset)
        if grid is not None:
            return WindingGrid(h, grid, offset)
        offset = (g.random() - 0.5) * 1e-9 * h
    raise WindingDegeneracy("scanline still hits a vertex after jittering")


def _raster(a, b, m, h, offset):
    ys = (np.arange(m) + 0.5) * h + offset
    ya, yb = a[:, 1], b[:, 1]
    lo, hi = np.minimum(ya, yb), np.maximum(ya, yb)
    # rows whose scanline lies strictly inside each segment's y-range
    r0 = np.ceil((lo - offset) / h - 0.5).astype(np.int64)
    r1 = np.floor((hi - offset) / h - 0.5).astype(np.int64)
    r0 = np.clip(r0, 0, m)
    r1 = np.clip(r1, -1, m - 1)
    counts = np.maximum(r1 - r0 + 1, 0)
    seg = np.repeat(np.arange(len(a)), counts)
    if len(seg) == 0:
        return np.zeros((m, m), dtype=np.int64)
    starts = np.repeat(r0 - np.cumsum(counts) + counts, counts)
    rows = starts + np.arange(len(seg))
    y = ys[rows]
    if np.any(y == ya[seg]) or np.any(y == yb[seg]):
        return None
    inside = (y > lo[seg]) & (y < hi[seg])
    seg, rows, y = seg[inside], rows[inside], y[inside]
    t = (y - ya[seg]) / (yb[seg] - ya[seg])
    x = a[seg, 0] + t * (b[seg, 0] - a[seg, 0])
    sign = np.where(yb[seg] < ya[seg], 1, -1)
    # first centre strictly right of x
    col = np.clip(np.floor(x / h + 0.5).astype(np.int64), 0, m)
    diff = np.zeros((m, m + 1), dtype=np.int64)
    np.add.at(diff, (rows, col), sign)
    return np.cumsum(diff, axis=1)[:, :m]


def discretization_error(Z: PolyCycle, h: float) -> float:
    """Certified bound on |raster integral - true integral| for any shift c.

    Within a cell ``w`` deviates from its centre value by at most the number of
    segments meeting the cell, and a segment meets at most
    ``(|dx| + |dy|)/h + 3`` cells.
    """
    if len(Z) == 0:
        return 0.0
    e = np.abs(Z.verts[:, 1, :] - Z.verts[:, 0, :]).sum()
    return float(h * e + 3.0 * h * h * len(Z))


def min_shift_l1(values: np.ndarray, cell_area: float) -> tuple[float, int]:
    vals = values.ravel()
    lo, hi = int(vals.min()), int(vals.max())
    counts = np.bincount(vals - lo)
    levels = np.arange(lo, hi + 1)
    best, best_c = np.inf, 0
    for c in range(-hi, -lo + 1):
        total = float(np.dot(counts, np.abs(levels + c)))
        if total < best:
            best, best_c = total, c
    return best * cell_area, best_c


def fv_winding(Z: PolyCycle, h: float, rng=None, return_details: bool = False):
    """Filling volume of a closed polygon in the square, with its error bound.

    Returns ``(value, error_bound)``; with ``return_details`` also the grid
    and the optimal integer shift.
    """
    grid = winding_function(Z, h, rng)
    value, c = min_shift_l1(grid.values, h * h)
    err = discretization_error(Z, h)
    if return_details:
        return value, err, grid, c
    return value, err
