"""Slicing cycles into signed 0-cycles.

Cube models are cut by coordinate planes ``{x_axes = values}``; the sphere
model by a fixed great sphere. Points on a slice keep the free coordinates in
increasing axis order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .chains import Ambient, PolyCycle, Pseudomanifold, SignedPoint, ZeroCycle
from .models import AffineKPlane, OrientedSubspace, _as_generator

LAMBDA_TOL = 1e-12
DET_TOL = 1e-12
COND_CAP = 1e12
MAX_RETRIES = 100
RETRY_WINDOW = 1e-9


class DegenerateSlice(ArithmeticError):
    """The slice hits a measure-zero configuration; retry with perturbed values."""


@dataclass(frozen=True)
class SliceSpec:
    fixed_axes: tuple
    values: tuple

    def __post_init__(self):
        axes = tuple(int(a) for a in self.fixed_axes)
        vals = tuple(float(v) for v in np.atleast_1d(self.values))
        if len(set(axes)) != len(axes):
            raise ValueError("fixed axes must be distinct")
        if len(vals) != len(axes):
            raise ValueError("one value per fixed axis")
        if any(v < 0.0 or v > 1.0 for v in vals):
            raise ValueError("slice values must lie in [0,1]")
        object.__setattr__(self, "fixed_axes", axes)
        object.__setattr__(self, "values", vals)

    def free_axes(self, n: int) -> list[int]:
        return [a for a in range(n) if a not in self.fixed_axes]

    def perturbed(self, rng) -> "SliceSpec":
        g = _as_generator(rng)
        vals = np.array(self.values) + RETRY_WINDOW * (g.random(len(self.values)) - 0.5)
        return SliceSpec(self.fixed_axes, tuple(np.clip(vals, 0.0, 1.0)))


class SliceAtom(NamedTuple):
    source_index: int
    point: Optional[SignedPoint]


def slice_segment(a, b, axis: int, c: float, source_index: int = -1) -> SliceAtom:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    da, db = a[axis] - c, b[axis] - c
    if da == 0.0 or db == 0.0:
        raise DegenerateSlice("slice value equals an endpoint coordinate")
    if da * db > 0:
        return SliceAtom(source_index, None)
    t = da / (da - db)
    p = a + t * (b - a)
    p = np.delete(p, axis)
    sign = 1 if b[axis] > a[axis] else -1
    return SliceAtom(source_index, SignedPoint(tuple(np.clip(p, 0.0, 1.0)), sign))


def _slice_cells(verts: np.ndarray, coefs: np.ndarray, x: np.ndarray):
    """Vectorised slice of linear k-simplices by ``{first k coords = x}``.

    Returns ``(present, points, signs, degenerate)``.
    """
    cells, kp1, n = verts.shape
    k = kp1 - 1
    proj = verts[:, :, :k]
    edges = (proj[:, 1:, :] - proj[:, :1, :]).transpose(0, 2, 1)
    det = np.linalg.det(edges) if k > 0 else np.ones(cells)
    # barycentric system [proj^T; 1] lam = [x; 1]
    A = np.concatenate([proj.transpose(0, 2, 1), np.ones((cells, 1, kp1))], axis=1)
    rhs = np.concatenate([x, [1.0]])
    flat = np.abs(det) < DET_TOL
    lam = np.zeros((cells, kp1))
    ok = ~flat
    if ok.any():
        Aok = A[ok]
        r = np.broadcast_to(rhs, (len(Aok), kp1))[..., None]
        sol = np.linalg.solve(Aok, r)
        # one step of iterative refinement
        sol += np.linalg.solve(Aok, r - Aok @ sol)
        lam[ok] = sol[..., 0]
    lam_min = lam.min(axis=1)
    present = ok & (lam_min > LAMBDA_TOL)
    degenerate = ok & (np.abs(lam_min) <= LAMBDA_TOL)
    for c in np.nonzero(flat)[0]:
        # x in the affine hull of the projected vertices?
        E = edges[c]
        rhs_c = x - proj[c, 0]
        coef, *_ = np.linalg.lstsq(E, rhs_c, rcond=None)
        if np.linalg.norm(E @ coef - rhs_c) <= 1e-9:
            degenerate[c] = True
    points = np.einsum("ci,cin->cn", lam, verts[:, :, k:])
    signs = (coefs * np.sign(det)).astype(np.int64)
    return present, np.clip(points, 0.0, 1.0), signs, degenerate


def slice_simplex(verts, coef: int, x, source_index: int = -1) -> SliceAtom:
    """Slice one linear k-simplex whose first k coordinates are the fixed axes."""
    verts = np.asarray(verts, dtype=np.float64)[None]
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    present, pts, signs, degen = _slice_cells(verts, np.array([coef]), x)
    if degen[0]:
        raise DegenerateSlice("slice meets a simplex face or a flat projection")
    if not present[0]:
        return SliceAtom(source_index, None)
    return SliceAtom(source_index, SignedPoint(tuple(pts[0]), int(signs[0])))


def slice_polycycle(Z: PolyCycle, spec: SliceSpec, atoms: bool = True):
    """Slice every cell; returns ``(ZeroCycle, atoms)`` with source indices kept."""
    if len(spec.fixed_axes) != Z.k:
        raise ValueError("need exactly k fixed axes")
    free = spec.free_axes(Z.n)
    order = list(spec.fixed_axes) + free
    ambient = Ambient.cube(Z.n - Z.k)
    if len(Z) == 0:
        return ZeroCycle.empty(ambient), []
    verts = Z.verts[:, :, order]
    present, pts, signs, degen = _slice_cells(verts, Z.coefs, np.array(spec.values))
    if degen.any():
        raise DegenerateSlice(f"{int(degen.sum())} degenerate cell slice(s)")
    idx = np.nonzero(present)[0]
    zc = ZeroCycle(ambient, pts[idx], signs[idx], sources=idx, check=False)
    atom_list = None
    if atoms:
        atom_list = [SliceAtom(i, None) for i in range(len(Z))]
        for i in idx:
            atom_list[i] = SliceAtom(int(i), SignedPoint(tuple(pts[i]), int(signs[i])))
    return zc, atom_list


def slice_with_retry(fn, spec: SliceSpec, rng, retries: int = MAX_RETRIES):
    """Call ``fn(spec)``, perturbing the slice values on :class:`DegenerateSlice`."""
    g = _as_generator(rng)
    current = spec
    for _ in range(retries + 1):
        try:
            return fn(current), current
        except DegenerateSlice:
            current = spec.perturbed(g)
    raise DegenerateSlice(f"still degenerate after {retries} retries")


def slice_plane(P: AffineKPlane, spec: SliceSpec, source_index: int = -1) -> SliceAtom:
    n, k = P.basis.shape
    axes = list(spec.fixed_axes)
    if len(axes) != k:
        raise ValueError("need exactly k fixed axes")
    free = spec.free_axes(n)
    Bax = P.basis[axes, :]
    if np.linalg.cond(Bax) > COND_CAP:
        raise DegenerateSlice("plane is (nearly) parallel to the slice plane")
    t = np.linalg.solve(Bax, np.array(spec.values) - P.offset[axes])
    q = P.offset + P.basis @ t
    if np.any(q < -LAMBDA_TOL) or np.any(q > 1 + LAMBDA_TOL):
        return SliceAtom(source_index, None)
    E = np.eye(n)[:, free]
    sign = 1 if np.linalg.det(np.hstack([P.basis, E])) > 0 else -1
    return SliceAtom(source_index, SignedPoint(tuple(np.clip(q[free], 0.0, 1.0)), sign))


def slice_planes(planes, spec: SliceSpec) -> tuple[ZeroCycle, list[SliceAtom]]:
    n = planes[0].n if planes else len(spec.fixed_axes) + 1
    atoms = [slice_plane(P, spec, i) for i, P in enumerate(planes)]
    present = [a for a in atoms if a.point is not None]
    d = n - len(spec.fixed_axes)
    pos = np.array([a.point.position for a in present], dtype=np.float64).reshape(len(present), d)
    zc = ZeroCycle(Ambient.cube(d), pos, [a.point.sign for a in present],
                   sources=[a.source_index for a in present], check=False)
    return zc, atoms


def _oriented_completion(basis: np.ndarray, u: np.ndarray):
    """Orthonormal vectors completing ``u`` to an oriented basis of span(basis).

    Returns ``(vectors, parity)``; parity is -1 only for a 1-dimensional span
    whose orientation disagrees with ``u`` (nothing left to flip).
    """
    coords = basis.T @ u
    Q, _ = np.linalg.qr(np.column_stack([coords, np.eye(len(coords))]))
    comp = Q[:, 1:len(coords)]
    parity = 1
    if np.linalg.det(np.column_stack([coords, comp])) < 0:
        if comp.shape[1]:
            comp[:, 0] = -comp[:, 0]
        else:
            parity = -1
    return basis @ comp, parity


def slice_great_sphere(U: OrientedSubspace, V: OrientedSubspace, rank_tol: float = 1e-9):
    """Intersect great spheres span(U), span(V) of complementary dimension.

    Returns ``(SignedPoint(+u), SignedPoint(-u))`` in ambient coordinates with
    ``u`` oriented so that ``det[u | B_U' | B_V'] > 0``.
    """
    A, B = U.basis, V.basis
    if A.shape[1] + B.shape[1] != A.shape[0] + 1:
        raise ValueError("need dim U + dim V = n + 2")
    _, s, vt = np.linalg.svd(np.hstack([A, -B]))
    # s has n+1 entries for an (n+1) x (n+2) matrix; the extra null direction is vt[-1]
    if s[-1] < rank_tol:
        raise DegenerateSlice("subspaces intersect in more than a line")
    coef = vt[-1]
    u = A @ coef[: A.shape[1]]
    u /= np.linalg.norm(u)
    cu, pu = _oriented_completion(A, u)
    cv, pv = _oriented_completion(B, u)
    if pu * pv * np.linalg.det(np.column_stack([u, cu, cv])) < 0:
        u = -u
    return SignedPoint(tuple(u), 1), SignedPoint(tuple(-u), -1)


def slice_great_spheres(subspaces, V: OrientedSubspace) -> ZeroCycle:
    """Slice of a union of great spheres by span(V), in V's orthonormal coordinates."""
    d = V.dim - 1
    pos, signs, src = [], [], []
    for i, U in enumerate(subspaces):
        plus, minus = slice_great_sphere(U, V)
        for pt in (plus, minus):
            c = V.basis.T @ np.array(pt.position)
            pos.append(c / np.linalg.norm(c))
            signs.append(pt.sign)
            src.append(i)
    pos = np.array(pos, dtype=np.float64).reshape(len(pos), d + 1)
    return ZeroCycle(Ambient.sphere(d), pos, signs, sources=src)


def dependency_graph(M: Pseudomanifold) -> list[set]:
    """Adjacency of top simplices sharing at least one vertex."""
    return M.neighbors()


def greedy_coloring(adjacency) -> list[list[int]]:
    """Greedy colouring in descending-degree order; colour classes largest first."""
    order = sorted(range(len(adjacency)), key=lambda i: (-len(adjacency[i]), i))
    color = [-1] * len(adjacency)
    for v in order:
        taken = {color[w] for w in adjacency[v]}
        c = 0
        while c in taken:
            c += 1
        color[v] = c
    classes: dict[int, list[int]] = {}
    for v, c in enumerate(color):
        classes.setdefault(c, []).append(v)
    return sorted(classes.values(), key=lambda cls: (-len(cls), cls[0]))
