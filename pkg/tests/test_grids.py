import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fibsh.grids import (Direction, SphericalGrid, gen_equiangular,
                         gen_fibonacci, gen_icosahedral, icosphere,
                         min_angular_separation)

from oracles import brute_min_separation

SQRT_3_OVER = math.sqrt(3.0) / 2.0


def test_fibonacci_single_point_is_equator():
    g = gen_fibonacci(1)
    assert g.n_points == 1
    assert g.theta[0] == pytest.approx(math.pi / 2, abs=1e-15)
    assert g.phi[0] == pytest.approx(0.0, abs=1e-15)


def test_fibonacci_two_points():
    g = gen_fibonacci(2)
    # d = -1/2 and +1/2: theta = asin(-1/2)+pi/2 and asin(1/2)+pi/2
    assert g.theta[0] == pytest.approx(math.pi / 3, abs=1e-14)
    assert g.theta[1] == pytest.approx(2 * math.pi / 3, abs=1e-14)
    # golden-angle azimuth 2*pi*frac(d*tau), hand-evaluated
    assert g.phi[0] == pytest.approx(4.3415742684541199, abs=1e-13)
    assert g.phi[1] == pytest.approx(1.9416110387254666, abs=1e-13)


def test_fibonacci_4300_structure():
    g = gen_fibonacci(4300)
    assert g.n_points == 4300
    z = np.cos(g.theta)
    assert np.max(np.abs(z)) < 1.0
    assert np.all(np.diff(z) < 0)  # strictly monotone along the spiral
    assert np.all((g.phi >= 0) & (g.phi < 2 * math.pi))


@pytest.mark.parametrize("n", [1, 2, 7, 100])
def test_fibonacci_z_monotone_and_canonical(n):
    g = gen_fibonacci(n)
    z = np.cos(g.theta)
    assert np.all(np.diff(z) <= 0)
    assert np.all((g.theta >= 0) & (g.theta <= math.pi))


def test_fibonacci_rejects_zero():
    with pytest.raises(ValueError):
        gen_fibonacci(0)


def test_equiangular_b1():
    g = gen_equiangular(1)
    assert g.n_points == 4
    assert sorted(set(np.round(g.theta, 12))) == pytest.approx([0.0, math.pi / 2])
    assert sorted(set(np.round(g.phi, 12))) == pytest.approx([0.0, math.pi])


def test_equiangular_counts_and_rings():
    assert gen_equiangular(32).n_points == 4096
    g = gen_equiangular(2)
    assert g.n_points == 16
    thetas = sorted(set(np.round(g.theta, 12)))
    assert thetas == pytest.approx([0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4])
    assert len(set(np.round(g.phi, 12))) == 4


def test_equiangular_rejects_zero():
    with pytest.raises(ValueError):
        gen_equiangular(0)


@pytest.mark.parametrize("k,expected", [(1, 12), (2, 42), (24, 5762)])
def test_icosahedral_counts(k, expected):
    assert gen_icosahedral(k).n_points == expected


def test_icosahedral_rejects_zero():
    with pytest.raises(ValueError):
        gen_icosahedral(0)


def test_icosahedral_points_distinct():
    g = gen_icosahedral(3)
    assert min_angular_separation(g) > 1e-3


def test_min_separation_antipodal():
    g = SphericalGrid("fibonacci", {"n": 2},
                      np.array([0.0, math.pi]), np.array([0.0, 0.0]))
    assert min_angular_separation(g) == pytest.approx(math.pi, abs=1e-12)


def test_min_separation_equiangular_pole_row_collapses():
    assert min_angular_separation(gen_equiangular(2)) == pytest.approx(0.0, abs=1e-12)


def test_min_separation_matches_brute_force():
    g = gen_fibonacci(100)
    sep = min_angular_separation(g)
    assert 0.0 < sep < math.pi
    assert sep == pytest.approx(brute_min_separation(g), abs=1e-12)


@pytest.mark.parametrize("n", [100, 513, 1000, 4300])
def test_fibonacci_uniformity_floor(n):
    # 0.5 * sqrt(4*pi/n) * 0.5: frozen uniformity floor
    assert min_angular_separation(gen_fibonacci(n)) > 0.25 * math.sqrt(4 * math.pi / n)


def test_min_separation_needs_two_points():
    with pytest.raises(ValueError):
        min_angular_separation(gen_fibonacci(1))


@pytest.mark.parametrize("grid", [gen_fibonacci(50), gen_equiangular(3),
                                  gen_icosahedral(2)])
def test_unit_vector_roundtrip(grid):
    xyz = grid.unit_vectors
    assert np.allclose(np.linalg.norm(xyz, axis=1), 1.0, atol=1e-12)
    theta = np.arccos(np.clip(xyz[:, 2], -1, 1))
    phi = np.arctan2(xyz[:, 1], xyz[:, 0]) % (2 * math.pi)
    s = np.sin(grid.theta)
    assert np.allclose(theta, grid.theta, atol=1e-12)
    # phi is undefined on the polar axis
    ok = s > 1e-9
    dphi = np.abs(phi[ok] - grid.phi[ok])
    assert np.all(np.minimum(dphi, 2 * math.pi - dphi) < 1e-9)


@given(theta=st.floats(-10, 10, allow_nan=False),
       phi=st.floats(-10, 10, allow_nan=False))
@settings(max_examples=200, deadline=None)
def test_direction_canonicalization(theta, phi):
    d = Direction(theta, phi).canonicalized()
    assert 0.0 <= d.theta <= math.pi
    assert 0.0 <= d.phi < 2 * math.pi
    assert np.allclose(d.unit_vector(), Direction(theta, phi).unit_vector(),
                       atol=1e-9)
    assert abs(np.linalg.norm(d.unit_vector()) - 1.0) < 1e-12


def test_grid_json_roundtrip(tmp_path):
    g = gen_fibonacci(37)
    path = tmp_path / "g.json"
    g.save(path)
    back = SphericalGrid.load(path)
    assert back.kind == g.kind and back.params == g.params
    assert np.array_equal(back.theta, g.theta)
    assert np.array_equal(back.phi, g.phi)
    doc = json.loads(path.read_text())
    assert set(doc) == {"kind", "params", "points"}


def test_grid_key_and_directions():
    g = gen_fibonacci(5)
    assert g.key == "fibonacci(n=5)"
    dirs = g.directions()
    assert len(dirs) == 5
    assert dirs[2].theta == g.theta[2]


def test_icosphere_counts_and_watertight():
    verts, faces = icosphere(4)
    assert verts.shape == (10 * 16 + 2, 3)
    assert faces.shape == (20 * 16, 3)
    assert np.allclose(np.linalg.norm(verts, axis=1), 1.0, atol=1e-12)
    edges = set()
    for a, b, c in faces:
        for e in ((a, b), (b, c), (c, a)):
            assert e not in edges  # consistent orientation
            edges.add(e)
    assert all((b, a) in edges for a, b in edges)  # closed


def test_icosphere_volume_approaches_sphere():
    verts, faces = icosphere(32)
    vol = np.einsum("ij,ij->", verts[faces[:, 0]],
                    np.cross(verts[faces[:, 1]], verts[faces[:, 2]])) / 6.0
    assert vol > 0
    assert vol == pytest.approx(4 * math.pi / 3, rel=5e-3)
