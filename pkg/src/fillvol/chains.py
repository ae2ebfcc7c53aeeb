"""Chain types: abstract pseudomanifolds, embedded polyhedral cycles, signed 0-cycles."""
from __future__ import annotations

import functools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple, Optional

import numpy as np

SPHERE_TOL = 1e-9


class StructuralError(ValueError):
    """Raised for malformed chain data (bad vertex indices, wrong tuple sizes)."""


@dataclass(frozen=True)
class Ambient:
    """Ambient space of a 0-cycle: the cube [0,1]^d or the sphere S^d."""

    kind: str
    d: int

    def __post_init__(self):
        if self.kind not in ("cube", "sphere"):
            raise ValueError(f"unknown ambient kind {self.kind!r}")
        if self.d < 1:
            raise ValueError("ambient dimension must be positive")

    @property
    def coord_dim(self) -> int:
        return self.d if self.kind == "cube" else self.d + 1

    @classmethod
    def cube(cls, d: int) -> "Ambient":
        return cls("cube", d)

    @classmethod
    def sphere(cls, d: int) -> "Ambient":
        return cls("sphere", d)


@dataclass(frozen=True)
class SignedPoint:
    position: tuple
    sign: int


class ZeroCycle:
    """Signed atomic 0-chain stored as arrays.

    ``positions`` is ``(m, coord_dim)``, ``signs`` holds +1/-1 and ``sources``
    optionally records the index of the generating cell for each point.
    """

    __slots__ = ("ambient", "positions", "signs", "sources")

    def __init__(self, ambient: Ambient, positions, signs, sources=None, check=True):
        positions = np.asarray(positions, dtype=np.float64)
        if positions.size == 0:
            positions = positions.reshape(0, ambient.coord_dim)
        signs = np.asarray(signs, dtype=np.int64).reshape(-1)
        if positions.ndim != 2 or positions.shape[1] != ambient.coord_dim:
            raise StructuralError(
                f"positions must have shape (m, {ambient.coord_dim}), got {positions.shape}"
            )
        if len(signs) != len(positions):
            raise StructuralError("signs and positions differ in length")
        if sources is not None:
            sources = np.asarray(sources, dtype=np.int64).reshape(-1)
            if len(sources) != len(signs):
                raise StructuralError("sources and positions differ in length")
        if check:
            if not np.all(np.abs(signs) == 1):
                raise StructuralError("signs must be +1 or -1")
            if ambient.kind == "cube":
                if np.any(positions < 0.0) or np.any(positions > 1.0):
                    raise StructuralError("cube points must lie in [0,1]^d")
            else:
                norms = np.linalg.norm(positions, axis=1)
                if np.any(np.abs(norms - 1.0) > SPHERE_TOL):
                    raise StructuralError("sphere points must be unit vectors")
                if signs.sum() != 0:
                    raise StructuralError("sphere 0-cycle must have zero total sign")
        positions.setflags(write=False)
        signs.setflags(write=False)
        if sources is not None:
            sources.setflags(write=False)
        self.ambient = ambient
        self.positions = positions
        self.signs = signs
        self.sources = sources

    def __len__(self):
        return len(self.signs)

    def __repr__(self):
        return f"ZeroCycle({self.ambient.kind}({self.ambient.d}), {len(self)} points)"

    @property
    def points(self) -> list[SignedPoint]:
        return [SignedPoint(tuple(p), int(s)) for p, s in zip(self.positions, self.signs)]

    @classmethod
    def from_points(cls, ambient: Ambient, points) -> "ZeroCycle":
        """Build from ``(position, sign)`` pairs or :class:`SignedPoint` objects."""
        pos, sg = [], []
        for pt in points:
            if isinstance(pt, SignedPoint):
                pos.append(pt.position)
                sg.append(pt.sign)
            else:
                pos.append(pt[0])
                sg.append(pt[1])
        return cls(ambient, np.array(pos, dtype=np.float64).reshape(len(pos), ambient.coord_dim), sg)

    @classmethod
    def empty(cls, ambient: Ambient) -> "ZeroCycle":
        return cls(ambient, np.zeros((0, ambient.coord_dim)), [])

    def negated(self) -> "ZeroCycle":
        return ZeroCycle(self.ambient, self.positions, -self.signs, self.sources, check=False)

    def subset(self, mask) -> "ZeroCycle":
        src = None if self.sources is None else self.sources[mask]
        return ZeroCycle(self.ambient, self.positions[mask], self.signs[mask], src, check=False)


def face_sign(simplex: tuple) -> tuple[tuple, int]:
    """Sort a vertex tuple, returning it with the parity sign of the sorting permutation."""
    order = sorted(range(len(simplex)), key=lambda i: simplex[i])
    sign = 1
    seen = [False] * len(order)
    for start in range(len(order)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = order[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return tuple(simplex[i] for i in order), sign


def boundary_chain(simplices, coefs) -> dict[tuple, int]:
    """Boundary of an oriented simplicial chain as ``{sorted face: coefficient}``.

    Zero coefficients are dropped, so a cycle returns ``{}``.
    """
    acc: dict[tuple, int] = defaultdict(int)
    for simplex, coef in zip(simplices, coefs):
        if len(simplex) < 2:
            continue
        for i in range(len(simplex)):
            face = simplex[:i] + simplex[i + 1 :]
            key, s = face_sign(tuple(face))
            acc[key] += coef * s * (-1) ** i
    return {f: c for f, c in acc.items() if c != 0}


class ValidationReport(NamedTuple):
    is_cycle: bool
    L: int


@dataclass(frozen=True)
class Pseudomanifold:
    """Abstract oriented k-complex given by its top simplices."""

    num_vertices: int
    k: int
    simplices: tuple
    coefs: tuple

    def __post_init__(self):
        simplices = tuple(tuple(int(v) for v in s) for s in self.simplices)
        coefs = tuple(int(c) for c in self.coefs)
        object.__setattr__(self, "simplices", simplices)
        object.__setattr__(self, "coefs", coefs)
        if len(simplices) != len(coefs):
            raise StructuralError("one coefficient per simplex required")
        for s in simplices:
            if len(s) != self.k + 1:
                raise StructuralError(f"simplex {s} does not have k+1={self.k + 1} vertices")
            if len(set(s)) != len(s):
                raise StructuralError(f"simplex {s} repeats a vertex")
            if any(v < 0 or v >= self.num_vertices for v in s):
                raise StructuralError(f"simplex {s} has a vertex index out of range")
        if any(c not in (1, -1) for c in coefs):
            raise StructuralError("coefficients must be +1 or -1")

    def __len__(self):
        return len(self.simplices)

    def vertex_incidence(self) -> list[list[int]]:
        inc: list[list[int]] = [[] for _ in range(self.num_vertices)]
        for idx, s in enumerate(self.simplices):
            for v in s:
                inc[v].append(idx)
        return inc

    def neighbors(self) -> list[set]:
        """For each simplex, the other simplices sharing at least one vertex."""
        nbrs = [set() for _ in self.simplices]
        for group in self.vertex_incidence():
            for a, b in combinations(group, 2):
                nbrs[a].add(b)
                nbrs[b].add(a)
        return nbrs

    @property
    def L(self) -> int:
        return max((len(nb) for nb in self.neighbors()), default=0)


def validate_pseudomanifold(M: Pseudomanifold) -> ValidationReport:
    # structural checks run in Pseudomanifold.__post_init__
    if not M.simplices:
        return ValidationReport(True, 0)
    return ValidationReport(not boundary_chain(M.simplices, M.coefs), M.L)


@functools.lru_cache(maxsize=64)
def make_cycle_graph(N: int) -> Pseudomanifold:
    """The cycle graph C_N as an oriented 1-pseudomanifold."""
    if N < 3:
        raise ValueError("cycle graph needs N >= 3")
    return Pseudomanifold(N, 1, tuple((i, (i + 1) % N) for i in range(N)), (1,) * N)


def octahedron_boundary() -> Pseudomanifold:
    """Coherently oriented boundary of the octahedron (vertices +-e_i as 2i, 2i+1)."""
    simplices, coefs = [], []
    for s0 in (0, 1):
        for s1 in (0, 1):
            for s2 in (0, 1):
                simplices.append((s0, 2 + s1, 4 + s2))
                # flipping any axis reverses orientation
                coefs.append(1 if (s0 + s1 + s2) % 2 == 0 else -1)
    return Pseudomanifold(6, 2, tuple(simplices), tuple(coefs))


@dataclass(frozen=True)
class PolyCycle:
    """Polyhedral k-cycle in [0,1]^n: oriented linear simplices with +-1 coefficients.

    ``verts`` has shape ``(cells, k+1, n)``. ``relative`` marks cycles whose
    boundary lies on the cube boundary rather than vanishing.
    """

    n: int
    k: int
    verts: np.ndarray
    coefs: np.ndarray
    provenance: Optional[Pseudomanifold] = field(default=None, compare=False)
    relative: bool = False

    def __post_init__(self):
        verts = np.asarray(self.verts, dtype=np.float64)
        if verts.size == 0:
            verts = verts.reshape(0, self.k + 1, self.n)
        coefs = np.asarray(self.coefs, dtype=np.int64).reshape(-1)
        if verts.ndim != 3 or verts.shape[1:] != (self.k + 1, self.n):
            raise StructuralError(f"verts must have shape (cells, {self.k + 1}, {self.n})")
        if len(coefs) != len(verts):
            raise StructuralError("one coefficient per cell required")
        if not np.all(np.abs(coefs) == 1):
            raise StructuralError("coefficients must be +1 or -1")
        if np.any(verts < 0.0) or np.any(verts > 1.0):
            raise StructuralError("vertex coordinates must lie in [0,1]")
        verts.setflags(write=False)
        coefs.setflags(write=False)
        object.__setattr__(self, "verts", verts)
        object.__setattr__(self, "coefs", coefs)

    def __len__(self):
        return len(self.coefs)

    @classmethod
    def from_embedding(cls, M: Pseudomanifold, points, n: int) -> "PolyCycle":
        points = np.asarray(points, dtype=np.float64)
        idx = np.array(M.simplices, dtype=np.intp).reshape(len(M), M.k + 1)
        return cls(n, M.k, points[idx], np.array(M.coefs, dtype=np.int64), provenance=M)

    def reversed(self) -> "PolyCycle":
        return PolyCycle(self.n, self.k, self.verts, -self.coefs, self.provenance, self.relative)

    def boundary(self, tol: float = 0.0) -> dict[tuple, int]:
        """Boundary over vertex positions (identified up to ``tol`` by rounding)."""
        keyed = np.round(self.verts / tol) * tol if tol > 0 else self.verts
        labels: dict[tuple, int] = {}
        simplices = []
        for cell in keyed:
            simplices.append(tuple(labels.setdefault(tuple(p), len(labels)) for p in cell))
        return boundary_chain(simplices, self.coefs.tolist())


def simplex_volumes(verts) -> np.ndarray:
    """k-volumes of linear simplices, ``verts`` shaped ``(cells, k+1, n)``."""
    verts = np.asarray(verts, dtype=np.float64)
    k = verts.shape[1] - 1
    if k == 0:
        return np.ones(len(verts))
    edges = verts[:, 1:, :] - verts[:, :1, :]
    gram = edges @ edges.transpose(0, 2, 1)
    det = np.linalg.det(gram) if k > 1 else gram[:, 0, 0]
    return np.sqrt(np.clip(det, 0.0, None)) / math.factorial(k)


def mass(Z: PolyCycle) -> float:
    if len(Z) == 0:
        return 0.0
    return float(np.sum(simplex_volumes(Z.verts) * np.abs(Z.coefs)))
