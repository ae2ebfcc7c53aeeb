"""JSON shapes for chains, 0-cycles and plane/subspace samples.

PolyCycle:      {"type": "polycycle", "n": 3, "k": 1, "relative": false,
                 "cells": [{"verts": [[x, ...], ...], "coef": 1}, ...]}
Pseudomanifold: {"type": "pseudomanifold", "num_vertices": 5, "k": 1,
                 "simplices": [{"verts": [0, 1], "coef": 1}, ...]}
ZeroCycle:      {"type": "zerocycle", "ambient": {"kind": "cube", "d": 2},
                 "points": [{"pos": [...], "sign": 1, "src": 0}, ...]}
Planes:         {"type": "planes", "n": 3, "k": 1,
                 "planes": [{"basis": [[...], ...], "offset": [...]}, ...]}
Subspaces:      {"type": "subspaces", "n": 3, "k": 1,
                 "subspaces": [{"basis": [[...], ...]}, ...]}

Floats are written with ``repr`` precision (17 significant digits).
"""
from __future__ import annotations

import json

import numpy as np

from .chains import Ambient, PolyCycle, Pseudomanifold, ZeroCycle
from .models import AffineKPlane, OrientedSubspace


def polycycle_to_dict(Z: PolyCycle) -> dict:
    return {
        "type": "polycycle",
        "n": Z.n,
        "k": Z.k,
        "relative": bool(Z.relative),
        "cells": [{"verts": cell.tolist(), "coef": int(c)} for cell, c in zip(Z.verts, Z.coefs)],
    }


def polycycle_from_dict(data: dict) -> PolyCycle:
    n, k = int(data["n"]), int(data["k"])
    cells = data.get("cells", [])
    verts = np.array([c["verts"] for c in cells], dtype=np.float64).reshape(len(cells), k + 1, n)
    coefs = np.array([c["coef"] for c in cells], dtype=np.int64)
    return PolyCycle(n, k, verts, coefs, relative=bool(data.get("relative", False)))


def pseudomanifold_to_dict(M: Pseudomanifold) -> dict:
    return {
        "type": "pseudomanifold",
        "num_vertices": M.num_vertices,
        "k": M.k,
        "simplices": [{"verts": list(s), "coef": c} for s, c in zip(M.simplices, M.coefs)],
    }


def pseudomanifold_from_dict(data: dict) -> Pseudomanifold:
    simp = data.get("simplices", [])
    return Pseudomanifold(
        int(data["num_vertices"]),
        int(data["k"]),
        tuple(tuple(s["verts"]) for s in simp),
        tuple(int(s["coef"]) for s in simp),
    )


def zerocycle_to_dict(Z: ZeroCycle) -> dict:
    points = []
    for i, (p, s) in enumerate(zip(Z.positions, Z.signs)):
        entry = {"pos": p.tolist(), "sign": int(s)}
        if Z.sources is not None:
            entry["src"] = int(Z.sources[i])
        points.append(entry)
    return {"type": "zerocycle", "ambient": {"kind": Z.ambient.kind, "d": Z.ambient.d}, "points": points}


def zerocycle_from_dict(data: dict) -> ZeroCycle:
    amb = data["ambient"]
    ambient = Ambient(amb["kind"], int(amb["d"]))
    pts = data.get("points", [])
    pos = np.array([p["pos"] for p in pts], dtype=np.float64).reshape(len(pts), ambient.coord_dim)
    signs = [int(p["sign"]) for p in pts]
    sources = [int(p["src"]) for p in pts] if pts and all("src" in p for p in pts) else None
    return ZeroCycle(ambient, pos, signs, sources)


def planes_to_dict(planes, n: int, k: int) -> dict:
    return {
        "type": "planes",
        "n": n,
        "k": k,
        "planes": [{"basis": P.basis.tolist(), "offset": P.offset.tolist()} for P in planes],
    }


def planes_from_dict(data: dict) -> list[AffineKPlane]:
    return [AffineKPlane(np.array(p["basis"], dtype=np.float64), np.array(p["offset"], dtype=np.float64))
            for p in data["planes"]]


def subspaces_to_dict(subspaces, n: int, k: int) -> dict:
    return {"type": "subspaces", "n": n, "k": k, "subspaces": [{"basis": U.basis.tolist()} for U in subspaces]}


def subspaces_from_dict(data: dict) -> list[OrientedSubspace]:
    return [OrientedSubspace(np.array(s["basis"], dtype=np.float64)) for s in data["subspaces"]]


_WRITERS = {
    PolyCycle: polycycle_to_dict,
    Pseudomanifold: pseudomanifold_to_dict,
    ZeroCycle: zerocycle_to_dict,
}

_READERS = {
    "polycycle": polycycle_from_dict,
    "pseudomanifold": pseudomanifold_from_dict,
    "zerocycle": zerocycle_from_dict,
    "planes": planes_from_dict,
    "subspaces": subspaces_from_dict,
}


def to_dict(obj) -> dict:
    return _WRITERS[type(obj)](obj)


def from_dict(data: dict):
    kind = data.get("type")
    if kind is None:
        # untagged documents: infer from keys
        if "ambient" in data:
            kind = "zerocycle"
        elif "num_vertices" in data:
            kind = "pseudomanifold"
        elif "cells" in data:
            kind = "polycycle"
        else:
            raise ValueError("cannot infer document type")
    return _READERS[kind](data)


def dumps(obj, **kw) -> str:
    data = obj if isinstance(obj, dict) else to_dict(obj)
    return json.dumps(data, **kw)


def load(path):
    with open(path) as fh:
        return from_dict(json.load(fh))
