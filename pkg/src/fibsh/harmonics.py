"""Orthonormal complex spherical harmonics and coefficient tables.

Conventions: Y_l^m = (-1)^m * N_l^|m| * P_l^|m|(cos theta) * exp(i*m*phi)
with N_l^m = sqrt((2l+1)/(4*pi) * (l-m)!/(l+m)!) and Condon-Shortley-free
P_l^m, i.e. the quantum-mechanics orthonormal basis (phase matches
scipy.special.sph_harm_y).  Negative orders come from the symmetry
Y_l^{-m} = (-1)^m * conj(Y_l^m).

Coefficient tables are flat arrays indexed by l*l + l + m, holding all
(l, m) with l < bandwidth.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .grids import Direction, SphericalGrid

#: default cap on basis-matrix entries (rows * columns)
MAX_BASIS_ENTRIES = 2 ** 28


def flat_index(l, m):
    """Flat coefficient index l*l + l + m; bijective onto 0..b^2-1 for l < b."""
    if abs(m) > l:
        raise ValueError(f"|m| must be <= l, got l={l}, m={m}")
    return l * l + l + m


def degree_order(idx):
    """Inverse of ``flat_index``."""
    if idx < 0:
        raise ValueError("index must be non-negative")
    l = int(math.isqrt(idx))
    return l, idx - l * l - l


def legendre_normalized(l, m, x):
    """Fully normalized associated Legendre value N_l^m * P_l^m(x).

    Normalization folds the factorial ratio into the recurrence (m-diagonal
    seed, then upward three-term recurrence on l), so values stay finite at
    least up to l = 512.  P_l^m carries no Condon-Shortley phase here.
    """
    if m < 0 or l < 0 or m > l:
        raise ValueError(f"need 0 <= m <= l, got l={l}, m={m}")
    if abs(x) > 1.0:
        raise ValueError(f"|x| must be <= 1, got {x}")
    s = math.sqrt(max(0.0, 1.0 - x * x))
    pmm = _kernels.INV_SQRT_4PI
    for mm in range(1, m + 1):
        pmm *= s * math.sqrt((2.0 * mm + 1.0) / (2.0 * mm))
    if l == m:
        return pmm
    p_prev = pmm
    p_curr = math.sqrt(2.0 * m + 3.0) * x * pmm
    for ll in range(m + 2, l + 1):
        a = math.sqrt((4.0 * ll * ll - 1.0) / (ll * ll - m * m))
        b = math.sqrt((2.0 * ll + 1.0) * ((ll - 1.0) ** 2 - m * m)
                      / ((2.0 * ll - 3.0) * (ll * ll - m * m)))
        p_prev, p_curr = p_curr, a * x * p_curr - b * p_prev
    return p_curr


def eval_ylm(l, m, direction):
    """Evaluate Y_l^m at a :class:`Direction` (or (theta, phi) pair)."""
    if abs(m) > l:
        raise ValueError(f"|m| must be <= l, got l={l}, m={m}")
    theta, phi = direction
    p = legendre_normalized(l, abs(m), math.cos(theta))
    cs = -1.0 if (m % 2) else 1.0
    val = cs * p * complex(math.cos(abs(m) * phi), math.sin(abs(m) * phi))
    if m < 0:
        val = cs * val.conjugate()
    return val


def _as_theta_phi(target):
    if isinstance(target, SphericalGrid):
        return target.theta, target.phi
    if isinstance(target, Direction):
        return np.array([target.theta]), np.array([target.phi])
    arr = np.asarray(target, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("targets must be a SphericalGrid or an (n, 2) array "
                         "of (theta, phi)")
    return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])


def eval_basis_block(targets, l_max_exclusive, max_entries=MAX_BASIS_ENTRIES):
    """Dense complex matrix of Y_l^m values: L^2 rows by n_points columns.

    Row l*l+l+m, column j is Y_l^m at point j.  This is the shared kernel
    behind the weight solver, the sampling spectrum and both transforms.
    Rejects requests whose entry count exceeds ``max_entries``.
    """
    if l_max_exclusive < 1:
        raise ValueError("l_max_exclusive must be >= 1")
    theta, phi = _as_theta_phi(targets)
    entries = l_max_exclusive * l_max_exclusive * theta.size
    if entries > max_entries:
        raise MemoryError(
            f"basis block of {entries} entries exceeds the cap {max_entries}")
    return _kernels.basis_block(theta, phi, l_max_exclusive)


@dataclass(frozen=True, eq=False)
class ShCoefficients:
    """Triangular complex coefficient table f^(l, m) for all l < bandwidth."""

    bandwidth: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.complex128, order="C")
        if vals.shape != (self.bandwidth ** 2,):
            raise ValueError(
                f"expected {self.bandwidth ** 2} coefficients, got {vals.shape}")
        object.__setattr__(self, "values", vals)
        self.values.setflags(write=False)

    def get(self, l, m):
        if l >= self.bandwidth:
            raise ValueError(f"degree {l} outside bandwidth {self.bandwidth}")
        return complex(self.values[flat_index(l, m)])

    def degree_slice(self, l):
        """All 2l+1 coefficients of degree l, orders -l..l."""
        return self.values[l * l:(l + 1) * (l + 1)]

    def is_real_signal(self, tol=1e-10):
        """True when f^(l,-m) = (-1)^m conj(f^(l,m)) holds within ``tol``."""
        for l in range(self.bandwidth):
            row = self.degree_slice(l)
            mirrored = np.conj(row[::-1])
            mirrored = mirrored * ((-1.0) ** np.arange(-l, l + 1))
            if np.max(np.abs(row - mirrored)) > tol:
                return False
        return True

    def to_json(self):
        return {
            "bandwidth": int(self.bandwidth),
            "values": [[float(v.real), float(v.imag)] for v in self.values],
        }

    @classmethod
    def from_json(cls, obj):
        pairs = np.asarray(obj["values"], dtype=np.float64)
        return cls(int(obj["bandwidth"]), pairs[:, 0] + 1j * pairs[:, 1])

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def random_real_signal_coeffs(bandwidth, rng, scale=1.0):
    """Random coefficient table satisfying the real-signal symmetry.

    m = 0 entries are standard normal reals; m > 0 entries are complex with
    independent N(0, 1/2) parts, mirrored to -m via the conjugation rule, so
    synthesized fields are real.
    """
    values = np.zeros(bandwidth * bandwidth, dtype=np.complex128)
    for l in range(bandwidth):
        values[flat_index(l, 0)] = rng.standard_normal() * scale
        for m in range(1, l + 1):
            z = (rng.standard_normal() + 1j * rng.standard_normal()) * (scale / math.sqrt(2.0))
            values[flat_index(l, m)] = z
            values[flat_index(l, -m)] = (-1.0) ** m * np.conj(z)
    return ShCoefficients(bandwidth, values)
