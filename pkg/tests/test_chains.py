import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fillvol.chains import (
    Ambient,
    PolyCycle,
    Pseudomanifold,
    SignedPoint,
    StructuralError,
    ZeroCycle,
    boundary_chain,
    face_sign,
    make_cycle_graph,
    mass,
    octahedron_boundary,
    validate_pseudomanifold,
)


def test_cycle_graph_c5():
    rep = validate_pseudomanifold(make_cycle_graph(5))
    assert rep.is_cycle and rep.L == 2


def test_single_edge_not_cycle():
    M = Pseudomanifold(2, 1, ((0, 1),), (1,))
    assert not validate_pseudomanifold(M).is_cycle


def test_empty_is_valid():
    rep = validate_pseudomanifold(Pseudomanifold(0, 1, (), ()))
    assert rep.is_cycle and rep.L == 0


def test_out_of_range_vertex():
    with pytest.raises(StructuralError):
        Pseudomanifold(2, 1, ((0, 2),), (1,))


def test_repeated_vertex_rejected():
    with pytest.raises(StructuralError):
        Pseudomanifold(3, 1, ((1, 1),), (1,))


def _brute_octahedron_incidence(M):
    # count signed incidences face by face, straight from the definition
    faces = {}
    for simp, c in zip(M.simplices, M.coefs):
        for i in range(len(simp)):
            face = simp[:i] + simp[i + 1:]
            sign = (-1) ** i
            order = sorted(range(len(face)), key=lambda t: face[t])
            inv = sum(1 for a, b in itertools.combinations(order, 2) if a > b)
            key = tuple(sorted(face))
            faces[key] = faces.get(key, 0) + c * sign * (-1) ** inv
    L = max(sum(1 for t in M.simplices if t is not s and set(t) & set(s)) for s in M.simplices)
    return all(v == 0 for v in faces.values()), L


def test_octahedron():
    M = octahedron_boundary()
    assert len(M) == 8
    rep = validate_pseudomanifold(M)
    assert rep == (True, 6)
    assert _brute_octahedron_incidence(M) == (True, 6)


@pytest.mark.parametrize("N", [3, 4, 5, 1000])
def test_make_cycle_graph(N):
    rep = validate_pseudomanifold(make_cycle_graph(N))
    assert rep.is_cycle and rep.L == 2


def test_make_cycle_graph_too_small():
    with pytest.raises(ValueError):
        make_cycle_graph(2)


def test_face_sign():
    assert face_sign((0, 1, 2)) == ((0, 1, 2), 1)
    assert face_sign((1, 0, 2)) == ((0, 1, 2), -1)
    assert face_sign((2, 0, 1)) == ((0, 1, 2), 1)


def test_boundary_of_edge():
    assert boundary_chain([(0, 1)], [1]) == {(1,): 1, (0,): -1}


def test_mass_examples():
    seg = PolyCycle(2, 1, np.array([[[0, 0], [1, 1]]], float), np.array([1]))
    assert mass(seg) == pytest.approx(math.sqrt(2), abs=1e-12)
    tri = PolyCycle(3, 2, np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]], float), np.array([1]))
    assert mass(tri) == pytest.approx(0.5, abs=1e-12)
    dbl = PolyCycle(2, 1, np.array([[[0, 0], [1, 1]]] * 2, float), np.array([1, 1]))
    assert mass(dbl) == pytest.approx(2 * math.sqrt(2), abs=1e-12)


def test_degenerate_simplex_zero_mass():
    tri = PolyCycle(3, 2, np.array([[[0, 0, 0], [0.5, 0.5, 0.5], [1, 1, 1]]], float), np.array([1]))
    assert mass(tri) == pytest.approx(0.0, abs=1e-12)


@given(st.integers(3, 40), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_embedded_cycle_has_no_boundary(N, n, seed):
    rng = np.random.default_rng(seed)
    M = make_cycle_graph(N)
    Z = PolyCycle.from_embedding(M, rng.random((N, n)), n)
    assert Z.boundary() == {}


@given(st.integers(0, 2**32 - 1))
def test_mass_invariant_under_permutation_and_isometry(seed):
    rng = np.random.default_rng(seed)
    Z = PolyCycle.from_embedding(make_cycle_graph(12), rng.random((12, 3)), 3)
    perm = rng.permutation(len(Z))
    Zp = PolyCycle(3, 1, Z.verts[perm], Z.coefs[perm])
    assert mass(Zp) == pytest.approx(mass(Z), abs=1e-9)
    # coordinate permutation plus reflection x -> 1 - x keeps [0,1]^3
    Zi = PolyCycle(3, 1, 1.0 - Z.verts[:, :, [2, 0, 1]], Z.coefs)
    assert mass(Zi) == pytest.approx(mass(Z), abs=1e-9)


def test_zero_cycle_validation():
    with pytest.raises(StructuralError):
        ZeroCycle(Ambient.cube(2), [[0.5, 1.5]], [1])
    with pytest.raises(StructuralError):
        ZeroCycle(Ambient.sphere(1), [[1.0, 0.0]], [1])  # unbalanced
    with pytest.raises(StructuralError):
        ZeroCycle(Ambient.sphere(1), [[1.0, 0.1], [-1.0, 0.0]], [1, -1])  # not unit
    with pytest.raises(StructuralError):
        ZeroCycle(Ambient.cube(1), [[0.5]], [2])
    Z = ZeroCycle(Ambient.sphere(1), [[1.0, 0.0], [-1.0, 0.0]], [1, -1])
    assert len(Z) == 2 and Z.points[0] == SignedPoint((1.0, 0.0), 1)


def test_zero_cycle_is_immutable():
    Z = ZeroCycle(Ambient.cube(1), [[0.5]], [1])
    with pytest.raises(ValueError):
        Z.positions[0, 0] = 0.1
