"""Spherical sampling grids: Fibonacci spiral, equiangular, icosahedral.

All grids store colatitude/azimuth arrays (``theta`` in [0, pi], ``phi`` in
[0, 2*pi)) in a fixed point order, are immutable after construction, and
serialize to the JSON layout ``{"kind": ..., "params": ..., "points":
[[theta, phi], ...]}``.
"""

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi

#: Golden-ratio fraction (sqrt(5)-1)/2; the spiral azimuth advances by
#: 2*pi*GOLDEN_FRACTION per index.
GOLDEN_FRACTION = (math.sqrt(5.0) - 1.0) / 2.0


class Direction(NamedTuple):
    """A direction on the unit sphere: colatitude ``theta``, azimuth ``phi``."""

    theta: float
    phi: float

    def canonicalized(self):
        """Equivalent direction with theta in [0, pi] and phi in [0, 2*pi)."""
        theta = self.theta % TWO_PI
        if theta >= TWO_PI:  # tiny negatives wrap onto 2*pi itself
            theta = 0.0
        phi = self.phi
        if theta > math.pi:
            theta = TWO_PI - theta
            phi = phi + math.pi
        phi = phi % TWO_PI
        if phi >= TWO_PI:
            phi = 0.0
        return Direction(theta, phi)

    def unit_vector(self):
        s = math.sin(self.theta)
        return np.array([s * math.cos(self.phi), s * math.sin(self.phi),
                         math.cos(self.theta)])


@dataclass(frozen=True, eq=False)
class SphericalGrid:
    """Ordered set of unit-sphere directions with generation metadata.

    Attributes
    ----------
    kind : str
        One of ``"fibonacci"``, ``"equiangular"``, ``"icosahedral"``.
    params : dict
        Generation parameters (``{"n": n}``, ``{"b": b}`` or ``{"k": k}``).
    theta, phi : ndarray
        Colatitude/azimuth per point, in point order.
    """

    kind: str
    params: dict
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", np.array(self.theta, dtype=np.float64, order="C"))
        object.__setattr__(self, "phi", np.array(self.phi, dtype=np.float64, order="C"))
        self.theta.setflags(write=False)
        self.phi.setflags(write=False)

    @property
    def n_points(self):
        return self.theta.size

    @property
    def key(self):
        """Stable identity string used to match fields/weights to their grid."""
        params = ",".join(f"{k}={self.params[k]}" for k in sorted(self.params))
        return f"{self.kind}({params})"

    @cached_property
    def unit_vectors(self):
        """(n, 3) unit vectors in point order."""
        s = np.sin(self.theta)
        xyz = np.stack([s * np.cos(self.phi), s * np.sin(self.phi),
                        np.cos(self.theta)], axis=1)
        xyz.setflags(write=False)
        return xyz

    def directions(self):
        return [Direction(t, p) for t, p in zip(self.theta, self.phi)]

    def to_json(self):
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "points": [[float(t), float(p)] for t, p in zip(self.theta, self.phi)],
        }

    @classmethod
    def from_json(cls, obj):
        pts = np.asarray(obj["points"], dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("grid JSON 'points' must be a list of [theta, phi] pairs")
        return cls(kind=obj["kind"], params=dict(obj["params"]),
                   theta=pts[:, 0], phi=pts[:, 1])

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def gen_fibonacci(n):
    """Spherical Fibonacci grid of ``n`` points.

    Point i sits at theta_i = asin(2*d/n) + pi/2 with d = (1-n)/2 + i, so the
    z coordinates -2*d/n decrease strictly and never reach the poles.  The
    azimuth advances by the golden angle: phi_i = 2*pi * frac(d * tau) with
    tau = (sqrt(5)-1)/2, wrapped into [0, 2*pi).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    i = np.arange(n, dtype=np.float64)
    d = (1.0 - n) / 2.0 + i
    theta = np.arcsin(2.0 * d / n) + math.pi / 2.0
    frac = d * GOLDEN_FRACTION
    frac -= np.floor(frac)
    phi = TWO_PI * frac
    return SphericalGrid("fibonacci", {"n": int(n)}, theta, phi)


def gen_equiangular(b):
    """Equiangular 2b x 2b grid, Driscoll-Healy node convention.

    theta_j = pi*j/(2b) for j = 0..2b-1 (north pole row included, south pole
    excluded), phi_k = pi*k/b for k = 0..2b-1, ordered row-major in (j, k).
    """
    if b < 1:
        raise ValueError(f"b must be >= 1, got {b}")
    j = np.arange(2 * b, dtype=np.float64)
    theta = np.repeat(math.pi * j / (2 * b), 2 * b)
    phi = np.tile(math.pi * j / b, 2 * b)
    return SphericalGrid("equiangular", {"b": int(b)}, theta, phi)


# icosahedron with outward-oriented faces; vertices from the three golden
# rectangles, normalized to the unit sphere
_ICO_RAW = np.array([
    [-1, GOLDEN_FRACTION + 1, 0], [1, GOLDEN_FRACTION + 1, 0],
    [-1, -(GOLDEN_FRACTION + 1), 0], [1, -(GOLDEN_FRACTION + 1), 0],
    [0, -1, GOLDEN_FRACTION + 1], [0, 1, GOLDEN_FRACTION + 1],
    [0, -1, -(GOLDEN_FRACTION + 1)], [0, 1, -(GOLDEN_FRACTION + 1)],
    [GOLDEN_FRACTION + 1, 0, -1], [GOLDEN_FRACTION + 1, 0, 1],
    [-(GOLDEN_FRACTION + 1), 0, -1], [-(GOLDEN_FRACTION + 1), 0, 1],
], dtype=np.float64)

_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
], dtype=np.int64)


def icosphere(k):
    """Frequency-``k`` icosphere: (vertices (10k^2+2, 3), faces (20k^2, 3)).

    Each icosahedron face is split into k^2 triangles by the barycentric
    lattice, lattice points are projected to the unit sphere, and vertices
    shared between faces are merged.  Faces keep the outward orientation of
    the base icosahedron.
    """
    if k < 1:
        raise ValueError(f"subdivision frequency must be >= 1, got {k}")
    base = _ICO_RAW / np.linalg.norm(_ICO_RAW, axis=1, keepdims=True)
    verts = []
    faces = []
    index_of = {}

    def add_vertex(v):
        key = (round(v[0], 9), round(v[1], 9), round(v[2], 9))
        idx = index_of.get(key)
        if idx is None:
            idx = len(verts)
            index_of[key] = idx
            verts.append(v)
        return idx

    for fa, fb, fc in _ICO_FACES:
        a, b, c = base[fa], base[fb], base[fc]
        # lattice[(i, j)] -> vertex index, barycentric (k-i-j, i, j)/k
        lattice = {}
        for i in range(k + 1):
            for j in range(k + 1 - i):
                p = (a * (k - i - j) + b * i + c * j) / k
                p = p / np.linalg.norm(p)
                lattice[(i, j)] = add_vertex(p)
        for i in range(k):
            for j in range(k - i):
                faces.append((lattice[(i, j)], lattice[(i + 1, j)],
                              lattice[(i, j + 1)]))
                if i + j < k - 1:
                    faces.append((lattice[(i + 1, j)], lattice[(i + 1, j + 1)],
                                  lattice[(i, j + 1)]))
    return np.asarray(verts), np.asarray(faces, dtype=np.int64)


def gen_icosahedral(k):
    """Icosahedral grid: the 10k^2+2 vertices of the frequency-``k`` icosphere."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    verts, _ = icosphere(k)
    theta = np.arccos(np.clip(verts[:, 2], -1.0, 1.0))
    phi = np.arctan2(verts[:, 1], verts[:, 0]) % TWO_PI
    return SphericalGrid("icosahedral", {"k": int(k)}, theta, phi)


GENERATORS = {
    "fibonacci": gen_fibonacci,
    "equiangular": gen_equiangular,
    "icosahedral": gen_icosahedral,
}


def min_angular_separation(grid):
    """Smallest great-circle angle between distinct point pairs, in radians."""
    xyz = grid.unit_vectors
    if xyz.shape[0] < 2:
        raise ValueError("need at least 2 points")
    from scipy.spatial import cKDTree

    dist, _ = cKDTree(xyz).query(xyz, k=2)
    min_chord = float(dist[:, 1].min())
    return 2.0 * math.asin(min(1.0, min_chord / 2.0))
