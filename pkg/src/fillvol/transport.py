"""Exact filling volume of signed 0-cycles.

On the cube the filling is relative to the boundary: each point is either
paired with a point of opposite sign (Euclidean cost) or sent to the nearest
face. On the sphere it is a perfect matching under geodesic distance.

The cube problem is solved as a rectangular assignment. With ``b`` the
boundary distances, pairing ``i`` with ``j`` saves
``w_ij = min(0, |x_i - y_j| - b_i - b_j)`` over sending both to the boundary.
All savings are non-positive, so an optimal partial matching extends to one
that covers the smaller sign class, and the filling volume is
``sum(b) + min_assignment(w)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .chains import Ambient, ZeroCycle
from .lap import solve_assignment

OPT_TOL = 1e-9
BRUTE_CAP = 8


class SolverError(RuntimeError):
    """The assignment duals failed the complementary-slackness certificate."""


@dataclass
class TransportPlan:
    pairings: list = field(default_factory=list)
    boundary_assignments: list = field(default_factory=list)
    total_cost: float = 0.0
    certificate_residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "pairings": [[int(i), int(j), float(c)] for i, j, c in self.pairings],
            "boundary": [[int(i), float(c)] for i, c in self.boundary_assignments],
            "total_cost": float(self.total_cost),
        }


def boundary_distance(positions: np.ndarray) -> np.ndarray:
    positions = np.asarray(positions, dtype=np.float64)
    if positions.shape[1] == 0:
        return np.zeros(len(positions))
    return np.minimum(positions, 1.0 - positions).min(axis=1)


def _sorted_profile(Z: ZeroCycle):
    """Breakpoints of G(x) = sum of signs at positions <= x, with segment lengths."""
    x = Z.positions[:, 0]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    G = np.cumsum(Z.signs[order])
    lengths = np.diff(np.append(xs, 1.0))
    return G, lengths


def _require_interval(Z: ZeroCycle):
    if Z.ambient != Ambient.cube(1):
        raise ValueError("expected a 0-cycle on [0,1]")


def fv_interval(Z: ZeroCycle) -> float:
    """min over c of the integral of |G + c| on [0,1], attained at an integer c."""
    _require_interval(Z)
    if len(Z) == 0:
        return 0.0
    G, lengths = _sorted_profile(Z)
    # G == 0 on [0, x_min)
    levels = np.append(G, 0)
    weights = np.append(lengths, Z.positions[:, 0].min())
    order = np.argsort(levels, kind="stable")
    cum = np.cumsum(weights[order])
    median = levels[order][np.searchsorted(cum, 0.5 * cum[-1])]
    best = np.inf
    for c in (-median - 1, -median, -median + 1):
        best = min(best, float(np.sum(weights * np.abs(levels + c))))
    return best


def mass_F0(Z: ZeroCycle) -> float:
    """Mass of the filling with density G(x) (the c = 0 filling)."""
    _require_interval(Z)
    if len(Z) == 0:
        return 0.0
    G, lengths = _sorted_profile(Z)
    return float(np.sum(np.abs(G) * lengths))


def _certify(cost, cols, u, v, tol):
    """Largest violation of the rectangular-assignment optimality conditions."""
    if cost.size == 0:
        return 0.0
    scale = max(1.0, float(np.abs(cost).max()))
    reduced = cost - u[:, None] - v[None, :]
    rows = np.arange(len(cols))
    viol = max(
        0.0,
        -float(reduced.min()),
        float(np.abs(reduced[rows, cols]).max()),
        float(v.max()),
    )
    unassigned = np.ones(cost.shape[1], dtype=bool)
    unassigned[cols] = False
    if unassigned.any():
        viol = max(viol, float(np.abs(v[unassigned]).max()))
    viol /= scale
    if viol > tol:
        raise SolverError(f"assignment certificate violated by {viol:.3g}")
    return viol


def fv_cube(Z: ZeroCycle, backend=None, check: bool = True) -> tuple[float, TransportPlan]:
    """Exact relative filling volume of a 0-cycle in [0,1]^d."""
    if Z.ambient.kind != "cube":
        raise ValueError("fv_cube needs a cube 0-cycle")
    if len(Z) == 0:
        return 0.0, TransportPlan()
    b = boundary_distance(Z.positions)
    pos_idx = np.nonzero(Z.signs > 0)[0]
    neg_idx = np.nonzero(Z.signs < 0)[0]
    if len(pos_idx) <= len(neg_idx):
        rows, cols = pos_idx, neg_idx
    else:
        rows, cols = neg_idx, pos_idx
    plan = TransportPlan()
    paired = np.zeros(len(Z), dtype=bool)
    if len(rows):
        X, Y = Z.positions[rows], Z.positions[cols]
        dist = np.sqrt(((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=2))
        w = np.minimum(0.0, dist - b[rows][:, None] - b[cols][None, :])
        col_of_row, u, v = solve_assignment(w, backend=backend)
        if check:
            plan.certificate_residual = _certify(w, col_of_row, u, v, OPT_TOL)
        for r, c in enumerate(col_of_row):
            if w[r, c] < 0.0:
                i, j = rows[r], cols[c]
                p, q = (i, j) if Z.signs[i] > 0 else (j, i)
                plan.pairings.append((int(p), int(q), float(dist[r, c])))
                paired[i] = paired[j] = True
    for i in np.nonzero(~paired)[0]:
        plan.boundary_assignments.append((int(i), float(b[i])))
    plan.total_cost = float(
        sum(c for _, _, c in plan.pairings) + sum(c for _, c in plan.boundary_assignments)
    )
    return plan.total_cost, plan


def geodesic(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return np.arccos(np.clip(X @ Y.T, -1.0, 1.0))


def fv_sphere(Z: ZeroCycle, backend=None, check: bool = True) -> tuple[float, TransportPlan]:
    """Exact filling volume of a balanced 0-cycle on S^d (geodesic perfect matching)."""
    if Z.ambient.kind != "sphere":
        raise ValueError("fv_sphere needs a sphere 0-cycle")
    if int(Z.signs.sum()) != 0:
        raise ValueError("sphere 0-cycle must be balanced")
    if len(Z) == 0:
        return 0.0, TransportPlan()
    pos_idx = np.nonzero(Z.signs > 0)[0]
    neg_idx = np.nonzero(Z.signs < 0)[0]
    cost = geodesic(Z.positions[pos_idx], Z.positions[neg_idx])
    col_of_row, u, v = solve_assignment(cost, backend=backend)
    plan = TransportPlan()
    if check:
        plan.certificate_residual = _certify(cost, col_of_row, u, v, OPT_TOL)
    for r, c in enumerate(col_of_row):
        plan.pairings.append((int(pos_idx[r]), int(neg_idx[c]), float(cost[r, c])))
    plan.total_cost = float(sum(c for _, _, c in plan.pairings))
    return plan.total_cost, plan


def fv_bruteforce(Z: ZeroCycle) -> float:
    """Exhaustive oracle for at most 8 points."""
    if len(Z) > BRUTE_CAP:
        raise ValueError(f"brute force is capped at {BRUTE_CAP} points")
    if len(Z) == 0:
        return 0.0
    P = Z.positions
    if Z.ambient.kind == "sphere":
        if int(Z.signs.sum()) != 0:
            raise ValueError("sphere 0-cycle must be balanced")
        pos = np.nonzero(Z.signs > 0)[0]
        neg = np.nonzero(Z.signs < 0)[0]
        cost = geodesic(P[pos], P[neg])
        return float(min(
            sum(cost[i, perm[i]] for i in range(len(pos)))
            for perm in itertools.permutations(range(len(neg)))
        ))

    b = boundary_distance(P)
    signs = Z.signs

    def best(remaining: tuple) -> float:
        if not remaining:
            return 0.0
        first, rest = remaining[0], remaining[1:]
        out = b[first] + best(rest)
        for idx, other in enumerate(rest):
            if signs[other] != signs[first]:
                d = float(np.linalg.norm(P[first] - P[other]))
                out = min(out, d + best(rest[:idx] + rest[idx + 1 :]))
        return out

    return float(best(tuple(range(len(Z)))))


def filling_volume(Z: ZeroCycle, method: str = "auto") -> float:
    """Dispatch on ``method`` in {auto, interval, flow, brute}."""
    if method == "brute":
        return fv_bruteforce(Z)
    if method == "interval":
        return fv_interval(Z)
    if Z.ambient.kind == "sphere":
        return fv_sphere(Z)[0]
    if method == "auto" and Z.ambient.d == 1:
        return fv_interval(Z)
    return fv_cube(Z)[0]
