"""Seeded generators for the random cycle models.

* random-jump / pseudomanifold embeddings in [0,1]^n,
* i.i.d. oriented affine k-planes meeting [0,1]^n,
* i.i.d. oriented great k-spheres in S^n (oriented (k+1)-subspaces of R^{n+1}).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chains import Ambient, PolyCycle, Pseudomanifold, ZeroCycle, make_cycle_graph, validate_pseudomanifold

REJECTION_CAP = 10**6
_MASK64 = (1 << 64) - 1


class SamplingError(RuntimeError):
    def __init__(self, message, acceptance_rate):
        super().__init__(f"{message} (acceptance rate {acceptance_rate:.3g})")
        self.acceptance_rate = acceptance_rate


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by ``(master_seed, stream_id)``.

    Every call to :meth:`generator` returns a fresh generator in the same
    state, so a stream's draws never depend on what other workers did.
    """

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.master_seed & _MASK64, spawn_key=(self.stream_id & _MASK64,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *keys: int) -> "RngStream":
        sid = self.stream_id
        for key in keys:
            sid = (sid * 0x9E3779B97F4A7C15 + key + 1) & _MASK64
        return RngStream(self.master_seed, sid)


def trial_stream(master_seed: int, n_index: int, trial: int) -> RngStream:
    return RngStream(master_seed, ((n_index & 0xFFFFFFFF) << 32) | (trial & 0xFFFFFFFF))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def oriented_qr(A: np.ndarray) -> np.ndarray:
    """Orthonormal columns of ``A`` with the positive-diagonal QR convention."""
    Q, R = np.linalg.qr(A)
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def orthogonal_complement(B: np.ndarray) -> np.ndarray:
    n, k = B.shape
    Q, _ = np.linalg.qr(B, mode="complete")
    return Q[:, k:]


def _check_orthonormal(B: np.ndarray, tol: float = 1e-9):
    if B.ndim != 2 or B.shape[1] > B.shape[0]:
        raise ValueError("basis must be a tall matrix")
    if np.abs(B.T @ B - np.eye(B.shape[1])).max() > tol:
        raise ValueError("basis columns must be orthonormal")


@dataclass(frozen=True)
class AffineKPlane:
    """Oriented affine k-plane ``offset + span(basis)``; offset is orthogonal to the basis."""

    basis: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=np.float64)
        off = np.asarray(self.offset, dtype=np.float64)
        _check_orthonormal(B)
        if off.shape != (B.shape[0],) or np.abs(B.T @ off).max(initial=0.0) > 1e-9:
            raise ValueError("offset must be orthogonal to the basis")
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "offset", off)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    def reversed(self) -> "AffineKPlane":
        B = self.basis.copy()
        B[:, 0] = -B[:, 0]
        return AffineKPlane(B, self.offset)


@dataclass(frozen=True)
class OrientedSubspace:
    """Oriented linear subspace of R^{n+1}; orientation is the column order."""

    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=np.float64)
        _check_orthonormal(B)
        object.__setattr__(self, "basis", B)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def sample_random_jump(N: int, n: int, rng) -> PolyCycle:
    """Closed polygon through N i.i.d. uniform points of [0,1]^n."""
    if N < 3:
        raise ValueError("random jump polygon needs N >= 3")
    if n < 2:
        raise ValueError("ambient dimension must be >= 2")
    # the cycle graph is a cycle by construction; skip re-validation
    points = _as_generator(rng).random((N, n))
    return PolyCycle.from_embedding(make_cycle_graph(N), points, n)


def embed_pseudomanifold(M: Pseudomanifold, n: int, rng) -> PolyCycle:
    if M.k >= n:
        raise ValueError("need k < n")
    if not validate_pseudomanifold(M).is_cycle:
        raise ValueError("pseudomanifold is not a cycle")
    g = _as_generator(rng)
    points = g.random((M.num_vertices, n))
    return PolyCycle.from_embedding(M, points, n)


def plane_meets_cube(basis: np.ndarray, point: np.ndarray, tol: float = 1e-12) -> bool:
    """Whether ``point + span(basis)`` intersects [0,1]^n."""
    n, k = basis.shape
    if k == 1:
        b = basis[:, 0]
        lo, hi = -np.inf, np.inf
        for bi, pi in zip(b, point):
            if abs(bi) < 1e-15:
                if pi < -tol or pi > 1 + tol:
                    return False
                continue
            t0, t1 = (-pi) / bi, (1 - pi) / bi
            lo = max(lo, min(t0, t1))
            hi = min(hi, max(t0, t1))
        return lo <= hi + tol
    from scipy.optimize import linprog

    # 0 <= point + B t <= 1
    A = np.vstack([basis, -basis])
    ub = np.concatenate([1 - point, point]) + tol
    res = linprog(np.zeros(k), A_ub=A, b_ub=ub, bounds=[(None, None)] * k, method="highs")
    return res.status == 0


def sample_plane_offsets(basis: np.ndarray, count: int, rng, cap: int = REJECTION_CAP) -> np.ndarray:
    """Offsets uniform on the shadow of [0,1]^n in the orthogonal complement of ``basis``.

    Returned as points of R^n (shape ``(count, n)``), sampled by rejection from
    the bounding box of the projected cube.
    """
    g = _as_generator(rng)
    W = orthogonal_complement(basis)
    lo = np.minimum(W, 0.0).sum(axis=0)
    hi = np.maximum(W, 0.0).sum(axis=0)
    out = np.empty((count, basis.shape[0]))
    for idx in range(count):
        for attempt in range(1, cap + 1):
            y = lo + (hi - lo) * g.random(W.shape[1])
            p = W @ y
            if plane_meets_cube(basis, p):
                out[idx] = p
                break
        else:
            raise SamplingError("offset rejection cap exceeded", 0.0)
    return out


def sample_cube_planes(N: int, n: int, k: int, rng) -> list[AffineKPlane]:
    """N i.i.d. oriented k-planes: Haar direction times uniform offset over the shadow polytope."""
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n")
    g = _as_generator(rng)
    planes = []
    for _ in range(N):
        B = oriented_qr(g.standard_normal((n, k)))
        offset = sample_plane_offsets(B, 1, g)[0]
        planes.append(AffineKPlane(B, offset))
    return planes


def sample_great_spheres(N: int, n: int, k: int, rng) -> list[OrientedSubspace]:
    """N i.i.d. Haar-random oriented (k+1)-subspaces of R^{n+1}."""
    if not 0 <= k < n:
        raise ValueError("need 0 <= k < n")
    g = _as_generator(rng)
    return [OrientedSubspace(oriented_qr(g.standard_normal((n + 1, k + 1)))) for _ in range(N)]


def sample_iid_zero_cycle(N: int, d: int, rng) -> ZeroCycle:
    """N i.i.d. uniform points of [0,1]^d with independent fair signs."""
    g = _as_generator(rng)
    pos = g.random((N, d))
    signs = np.where(g.random(N) < 0.5, 1, -1)
    return ZeroCycle(Ambient.cube(d), pos, signs, check=False)
