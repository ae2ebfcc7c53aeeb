"""Dual witnesses: Lipschitz functions vanishing on the cube boundary.

For any such ``f``, ``integral_Z f / Lip(f)`` is a lower bound on the relative
filling volume of ``Z``. Witnesses here are sums of pyramid atoms
``coef * max(0, 1 - (2/side) * |x - center|_inf)`` over axis-aligned cubes.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chains import Ambient, Pseudomanifold, ZeroCycle
from .slicing import dependency_graph, greedy_coloring

_CHUNK = 1 << 22
_ALIGN_TOL = 1e-9


class WitnessError(ArithmeticError):
    pass


@dataclass(frozen=True)
class PyramidAtom:
    corner: tuple
    side: float
    coefficient: float

    def __post_init__(self):
        if self.side <= 0:
            raise ValueError("side length must be positive")
        c = np.asarray(self.corner, dtype=np.float64)
        if np.any(c < -_ALIGN_TOL) or np.any(c + self.side > 1 + _ALIGN_TOL):
            raise ValueError("atom cube must lie inside [0,1]^d")

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.corner, dtype=np.float64) + 0.5 * self.side


def pyramid_eval(atom: PyramidAtom, x) -> float:
    t = np.max(np.abs(np.asarray(x, dtype=np.float64) - atom.center)) * 2.0 / atom.side
    return float(atom.coefficient * max(0.0, 1.0 - t))


class WitnessFunction:
    """Finite sum of pyramid atoms with a certified Lipschitz bound."""

    def __init__(self, d, corners, sides, coefs, scales=None, certified_lip=None, kind="custom"):
        self.d = int(d)
        self.corners = np.asarray(corners, dtype=np.float64).reshape(-1, self.d)
        self.sides = np.asarray(sides, dtype=np.float64).reshape(-1)
        self.coefs = np.asarray(coefs, dtype=np.float64).reshape(-1)
        n = len(self.coefs)
        self.scales = np.zeros(n, dtype=np.int64) if scales is None else np.asarray(scales, dtype=np.int64)
        if not (len(self.corners) == len(self.sides) == n == len(self.scales)):
            raise ValueError("atom arrays differ in length")
        if certified_lip is None:
            certified_lip = float(np.sum(2.0 / self.sides * np.abs(self.coefs))) if n else 0.0
        self.certified_lip = float(certified_lip)
        self.kind = kind

    @classmethod
    def from_atoms(cls, d, atoms, scale_tags=None, certified_lip=None):
        return cls(
            d,
            [a.corner for a in atoms],
            [a.side for a in atoms],
            [a.coefficient for a in atoms],
            scale_tags,
            certified_lip,
        )

    def __len__(self):
        return len(self.coefs)

    @property
    def atoms(self) -> list[PyramidAtom]:
        return [PyramidAtom(tuple(c), float(s), float(k)) for c, s, k in zip(self.corners, self.sides, self.coefs)]

    def scaled(self, factor: float) -> "WitnessFunction":
        return WitnessFunction(self.d, self.corners, self.sides, self.coefs * factor, self.scales,
                               self.certified_lip * abs(factor), self.kind)

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.zeros(len(X))
        if len(self) == 0 or len(X) == 0:
            return out
        centers = self.corners + 0.5 * self.sides[:, None]
        half = 0.5 * self.sides
        step = max(1, _CHUNK // max(1, len(self) * self.d))
        for start in range(0, len(X), step):
            x = X[start : start + step]
            t = np.abs(x[:, None, :] - centers[None, :, :]).max(axis=2) / half[None, :]
            out[start : start + step] = (np.maximum(0.0, 1.0 - t) * self.coefs[None, :]).sum(axis=1)
        return out

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "kind": self.kind,
            "atoms": [
                {"corner": c.tolist(), "side": float(s), "coef": float(k), "scale": int(r)}
                for c, s, k, r in zip(self.corners, self.sides, self.coefs, self.scales)
            ],
        }


def _cell_index(positions: np.ndarray, m: int) -> np.ndarray:
    # half-open cells [t/m, (t+1)/m); the point 1.0 belongs to the last cell
    return np.minimum(np.floor(positions * m).astype(np.int64), m - 1)


def default_grid_cells(N: int, d: int) -> int:
    return max(1, int(round(N ** (1.0 / d))))


def build_grid_witness(Z: ZeroCycle, r: Optional[float] = None) -> WitnessFunction:
    """Single-scale witness: ``r * sign(net count)`` pyramids on a grid of side ``r``."""
    d = Z.ambient.d
    m = default_grid_cells(max(len(Z), 1), d) if r is None else int(round(1.0 / r))
    if m < 1 or (r is not None and abs(m * r - 1.0) > 1e-9):
        raise ValueError("1/r must be a positive integer")
    side = 1.0 / m
    if len(Z) == 0:
        return WitnessFunction(d, np.zeros((0, d)), [], [], certified_lip=0.0, kind="grid")
    cells = _cell_index(Z.positions, m)
    flat = np.ravel_multi_index(cells.T, (m,) * d)
    net = np.zeros(m**d, dtype=np.int64)
    np.add.at(net, flat, Z.signs)
    nz = np.nonzero(net)[0]
    corners = np.column_stack(np.unravel_index(nz, (m,) * d)) * side if len(nz) else np.zeros((0, d))
    coefs = side * np.sign(net[nz])
    return WitnessFunction(d, corners, np.full(len(nz), side), coefs,
                           certified_lip=2.0 if len(nz) else 0.0, kind="grid")


def default_max_scale(N: int) -> int:
    return max(1, int(math.floor(0.1 * math.log2(N)))) if N > 1 else 1


def build_multiscale_witness(Z: ZeroCycle, max_scale: Optional[int] = None, cap: float = 1.0) -> WitnessFunction:
    """Dyadic multi-scale witness on [0,1]^2 with per-scale coefficient capping.

    Scale r uses squares of side 2^-r; the raw coefficient of a square is the
    signed sum of its pyramid over Z, capped at ``cap * sqrt(N) * 2^-r``.
    """
    d = Z.ambient.d
    N = len(Z)
    R = default_max_scale(N) if max_scale is None else int(max_scale)
    if R < 1:
        raise ValueError("max_scale must be >= 1")
    corners, sides, coefs, scales = [], [], [], []
    lip = 0.0
    for r in range(1, R + 1):
        m = 2**r
        side = 1.0 / m
        if N == 0:
            continue
        cells = _cell_index(Z.positions, m)
        centers = (cells + 0.5) * side
        vals = np.maximum(0.0, 1.0 - np.abs(Z.positions - centers).max(axis=1) * 2.0 / side)
        flat = np.ravel_multi_index(cells.T, (m,) * d)
        raw = np.zeros(m**d)
        np.add.at(raw, flat, Z.signs * vals)
        limit = cap * math.sqrt(N) * side
        stored = np.sign(raw) * np.minimum(np.abs(raw), limit)
        nz = np.nonzero(stored)[0]
        if len(nz) == 0:
            continue
        corners.append(np.column_stack(np.unravel_index(nz, (m,) * d)) * side)
        sides.append(np.full(len(nz), side))
        coefs.append(stored[nz])
        scales.append(np.full(len(nz), r))
        lip += 2.0 * m * float(np.abs(stored[nz]).max())
    if not coefs:
        return WitnessFunction(d, np.zeros((0, d)), [], [], certified_lip=0.0, kind="multiscale")
    return WitnessFunction(d, np.vstack(corners), np.concatenate(sides), np.concatenate(coefs),
                           np.concatenate(scales), certified_lip=lip, kind="multiscale")


def build_interval_witness(Z: ZeroCycle, R: int, C: float = 1.0) -> WitnessFunction:
    """R equal intervals, coefficient ``sign(count) * min(|count|, C sqrt(N/R))``."""
    if R < 1:
        raise ValueError("R must be >= 1")
    if Z.ambient.d != 1:
        raise ValueError("interval witness needs a 0-cycle on [0,1]")
    if len(Z) == 0:
        return WitnessFunction(1, np.zeros((0, 1)), [], [], certified_lip=0.0, kind="interval")
    cells = _cell_index(Z.positions, R)[:, 0]
    counts = np.bincount(cells, weights=Z.signs, minlength=R)
    stored = np.sign(counts) * np.minimum(np.abs(counts), C * math.sqrt(len(Z) / R))
    nz = np.nonzero(stored)[0]
    lip = 2.0 * R * float(np.abs(stored).max())
    return WitnessFunction(1, (nz / R)[:, None], np.full(len(nz), 1.0 / R), stored[nz],
                           certified_lip=lip, kind="interval")


def integrate_witness(W: WitnessFunction, Z: ZeroCycle) -> float:
    if W.d != Z.ambient.d:
        raise ValueError("dimension mismatch")
    if len(Z) == 0:
        return 0.0
    return float(np.dot(Z.signs, W(Z.positions)))


def _region_offsets(d: int, h: float) -> np.ndarray:
    """One interior point per region of the sign/ordering subdivision of a cell of side h."""
    mags = 0.5 * h * (d - np.arange(d)) / (d + 1)
    out = []
    for perm in itertools.permutations(range(d)):
        base = np.empty(d)
        base[list(perm)] = mags
        for signs in itertools.product((-1.0, 1.0), repeat=d):
            out.append(base * signs)
    return np.array(out)


def exact_lipschitz(W: WitnessFunction, max_points: int = 2_000_000) -> Optional[float]:
    """Exact Euclidean Lipschitz constant when all atoms tile a common grid.

    Each atom is linear on the pieces of the sign/ordering subdivision of every
    cell of the finest grid, so the constant is the largest gradient norm over
    one interior point per piece. Returns ``None`` when atoms are not aligned,
    overlap within a scale, or the grid is too large.
    """
    if len(W) == 0:
        return 0.0
    h = float(W.sides.min())
    m = int(round(1.0 / h))
    if abs(m * h - 1.0) > _ALIGN_TOL:
        return None
    groups = []
    for side in np.unique(W.sides):
        sel = W.sides == side
        ms = int(round(1.0 / side))
        ratio = side / h
        if abs(ms * side - 1.0) > _ALIGN_TOL or abs(ratio - round(ratio)) > _ALIGN_TOL:
            return None
        idx = W.corners[sel] * ms
        if np.any(np.abs(idx - np.round(idx)) > _ALIGN_TOL):
            return None
        flat = np.ravel_multi_index(np.round(idx).astype(np.int64).T, (ms,) * W.d)
        if len(np.unique(flat)) != len(flat):
            return None
        table = np.zeros(ms**W.d)
        table[flat] = W.coefs[sel]
        groups.append((ms, side, table))
    offsets = _region_offsets(W.d, h)
    n_cells = m**W.d
    if n_cells * len(offsets) > max_points:
        return None
    best = 0.0
    cells_per_chunk = max(1, (1 << 18) // len(offsets))
    for start in range(0, n_cells, cells_per_chunk):
        ids = np.arange(start, min(n_cells, start + cells_per_chunk))
        centers = (np.column_stack(np.unravel_index(ids, (m,) * W.d)) + 0.5) * h
        pts = (centers[:, None, :] + offsets[None, :, :]).reshape(-1, W.d)
        grad = np.zeros_like(pts)
        for ms, side, table in groups:
            cells = _cell_index(pts, ms)
            coef = table[np.ravel_multi_index(cells.T, (ms,) * W.d)]
            diff = pts - (cells + 0.5) * side
            axis = np.abs(diff).argmax(axis=1)
            rows = np.arange(len(pts))
            grad[rows, axis] -= coef * (2.0 / side) * np.sign(diff[rows, axis])
        best = max(best, float(np.sqrt((grad**2).sum(axis=1)).max()))
    return best


def lip_report(W: WitnessFunction) -> dict:
    exact = exact_lipschitz(W)
    used = W.certified_lip if exact is None else min(W.certified_lip, exact)
    return {"certified": W.certified_lip, "exact": exact, "used": used}


def lip_bound(W: WitnessFunction) -> float:
    return lip_report(W)["used"]


def witness_lower_bound(W: WitnessFunction, Z: ZeroCycle, lip: Optional[float] = None) -> float:
    integral = integrate_witness(W, Z)
    lip = lip_bound(W) if lip is None else lip
    if lip == 0.0:
        if abs(integral) > 0.0:
            raise WitnessError("zero Lipschitz bound with nonzero integral")
        return 0.0
    return max(0.0, integral / lip)


def build_witness(Z: ZeroCycle, params: Optional[dict] = None) -> WitnessFunction:
    """The dimension-appropriate construction: interval (d=1), multiscale (d=2), grid (d>=3)."""
    params = params or {}
    d = Z.ambient.d
    if d == 1:
        return build_interval_witness(Z, int(params.get("R", 16)), float(params.get("C", 1.0)))
    if d == 2:
        return build_multiscale_witness(Z, params.get("max_scale"), float(params.get("cap", 1.0)))
    return build_grid_witness(Z, params.get("r"))


def _atoms_to_cycle(atoms) -> ZeroCycle:
    present = [a for a in atoms if a.point is not None]
    if not present:
        raise ValueError("cannot infer the slice dimension from an empty atom list")
    d = len(present[0].point.position)
    pos = np.array([a.point.position for a in present], dtype=np.float64).reshape(len(present), d)
    return ZeroCycle(Ambient.cube(d), pos, [a.point.sign for a in present],
                     sources=[a.source_index for a in present])


def knot_slice_lower_bound(zc: ZeroCycle, M: Pseudomanifold, params: Optional[dict] = None) -> dict:
    """Witness bound for a knot slice built from its largest independent colour class.

    ``zc`` is a slice produced by :func:`fillvol.slicing.slice_polycycle`, either
    the ZeroCycle (its ``sources`` index the simplices of ``M``) or the atom list. Colour classes of the dependency
    graph are ranked by how many present slice points they carry; the witness
    is built from the top class alone and integrated over the whole slice.
    """
    if isinstance(zc, (list, tuple)):
        zc = _atoms_to_cycle(zc)
    if zc.sources is None:
        raise ValueError("slice must carry source indices")
    classes = greedy_coloring(dependency_graph(M))
    present = set(int(s) for s in zc.sources)
    ranked = sorted(classes, key=lambda cls: (-sum(1 for i in cls if i in present), -len(cls), cls[0]))
    top = set(ranked[0]) if ranked else set()
    mask = np.array([int(s) in top for s in zc.sources], dtype=bool)
    z1 = zc.subset(mask)
    result = {"colors": len(classes), "z1_size": int(mask.sum()), "present": len(zc)}
    if len(z1) == 0:
        result.update(integral=0.0, lip=0.0, bound=0.0)
        return result
    W = build_witness(z1, params)
    lip = lip_bound(W)
    integral = integrate_witness(W, zc)
    result.update(integral=integral, lip=lip, bound=witness_lower_bound(W, zc, lip))
    return result
