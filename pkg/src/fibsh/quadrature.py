"""Quadrature weights for the discrete spherical harmonic transform.

The analytic weights solve the constraint system

    sqrt(2*pi) * sum_j w_j * conj(Y_l^m)(x_j) = delta_{l0} delta_{m0}
    for all 0 <= l < 2b, |m| <= l,

i.e. the sampling comb's spherical-harmonic spectrum is 1 at degree zero and
vanishes for 0 < l < 2b, which pushes all aliasing above the band limit and
forces sum(w) = sqrt(2).  Equal weights, Monte-Carlo Voronoi area weights,
and the closed-form Driscoll-Healy weights for the equiangular grid are the
comparison baselines.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .grids import SphericalGrid, gen_equiangular
from .harmonics import ShCoefficients, eval_basis_block

SQRT_2PI = math.sqrt(2.0 * math.pi)
SQRT_2 = math.sqrt(2.0)

#: default Monte-Carlo sample count and seed for Voronoi area estimation
AREA_MC_SAMPLES = 4_000_000
AREA_MC_SEED = 0x5EED

#: relative singular-value cutoff for the rank-revealing min-norm solve
SOLVER_RCOND = 1e-12

#: residual above which a solve is considered failed (degenerate grid)
SOLVE_FAIL_RESIDUAL = 1e-8


class InsufficientSamplesError(ValueError):
    """Grid has fewer points than the 4b^2 constraints require."""


class SolveFailedError(RuntimeError):
    """Weight solve left a residual too large to trust (degenerate grid)."""


@dataclass(frozen=True, eq=False)
class QuadratureWeights:
    """Per-point quadrature weights bound to a grid.

    ``bandwidth`` is the exactness bandwidth b for methods that have one
    (analytic, dh); equal and area weights carry ``bandwidth=None`` since
    they promise no exactness at any degree.  ``residual`` records the max
    constraint violation measured at construction time.
    """

    grid: SphericalGrid
    bandwidth: int | None
    method: str
    weights: np.ndarray = field(repr=False)
    residual: float = 0.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, order="C")
        if w.shape != (self.grid.n_points,):
            raise ValueError("weight count must equal grid point count")
        object.__setattr__(self, "weights", w)
        self.weights.setflags(write=False)

    def to_json(self):
        return {
            "grid": self.grid.to_json(),
            "bandwidth": None if self.bandwidth is None else int(self.bandwidth),
            "method": self.method,
            "residual": float(self.residual),
            "weights": [float(w) for w in self.weights],
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            grid=SphericalGrid.from_json(obj["grid"]),
            bandwidth=obj["bandwidth"],
            method=obj["method"],
            weights=np.asarray(obj["weights"], dtype=np.float64),
            residual=float(obj["residual"]),
        )


def _real_constraint_system(basis_2b, b):
    """Real reformulation of the complex constraint rows.

    For real weights the (l, -m) constraints are conjugate-redundant with
    (l, m), so the system uses one row per (l, 0) plus separate real and
    imaginary rows per (l, m > 0): sum_{l<2b} (2l+1) = 4b^2 real rows.
    """
    n = basis_2b.shape[1]
    rows = np.empty((4 * b * b, n))
    r = 0
    for l in range(2 * b):
        base = l * l + l
        rows[r] = basis_2b[base].real
        r += 1
        for m in range(1, l + 1):
            conj_row = np.conj(basis_2b[base + m])
            rows[r] = conj_row.real
            rows[r + 1] = conj_row.imag
            r += 2
    rows *= SQRT_2PI
    rhs = np.zeros(4 * b * b)
    rhs[0] = 1.0
    return rows, rhs


def _spectrum_residual(basis_2b, weights):
    """Max |s_hat - target| over all (l, m) with l < 2b."""
    shat = SQRT_2PI * (np.conj(basis_2b) @ weights)
    shat[0] -= 1.0
    return float(np.max(np.abs(shat)))


def solve_analytic_weights(grid, b, rcond=SOLVER_RCOND, _basis=None):
    """Minimum-norm real weights satisfying all 4b^2 comb-spectrum constraints.

    The underdetermined system (n >= 4b^2 unknowns) is solved by a
    rank-revealing complete orthogonal decomposition; singular values below
    ``rcond`` times the largest are treated as rank-deficient directions
    (this absorbs the coincident equiangular pole row).

    Raises
    ------
    InsufficientSamplesError
        If the grid has fewer than 4b^2 points.
    SolveFailedError
        If the recorded residual exceeds 1e-8, signalling a degenerate grid.
    """
    if b < 1:
        raise ValueError(f"bandwidth must be >= 1, got {b}")
    n = grid.n_points
    if n < 4 * b * b:
        raise InsufficientSamplesError(
            f"grid has {n} points but bandwidth {b} needs at least {4 * b * b}")
    basis = eval_basis_block(grid, 2 * b) if _basis is None else _basis
    system, rhs = _real_constraint_system(basis, b)
    w, _, _, _ = scipy.linalg.lstsq(system, rhs, cond=rcond,
                                    lapack_driver="gelsy")
    residual = _spectrum_residual(basis, w)
    if residual > SOLVE_FAIL_RESIDUAL:
        raise SolveFailedError(
            f"weight solve residual {residual:.3e} exceeds "
            f"{SOLVE_FAIL_RESIDUAL:.0e} on {grid.key} at b={b}")
    return QuadratureWeights(grid, int(b), "analytic", w, residual)


def equal_weights(grid):
    """Identical weight sqrt(2)/n per point (the degree-0 condition alone)."""
    n = grid.n_points
    if n < 1:
        raise ValueError("grid is empty")
    w = np.full(n, SQRT_2 / n)
    basis0 = eval_basis_block(grid, 1)
    return QuadratureWeights(grid, None, "equal", w,
                             _spectrum_residual(basis0, w))


def area_weights(grid, mc_samples=AREA_MC_SAMPLES, seed=AREA_MC_SEED):
    """Monte-Carlo spherical Voronoi cell-area weights, w_j = A_j / (2*pi*sqrt(2)).

    Cell areas are estimated as 4*pi times the fraction of uniformly random
    sphere samples whose nearest grid point is j, so the weights sum to
    sqrt(2) by construction and the estimate is reproducible for a fixed
    seed.
    """
    from scipy.spatial import cKDTree

    n = grid.n_points
    if n < 2:
        raise ValueError("area weights need at least 2 points")
    if mc_samples < 10 ** 5:
        raise ValueError(f"mc_samples must be >= 1e5, got {mc_samples}")
    tree = cKDTree(grid.unit_vectors)
    rng = np.random.default_rng(seed)
    counts = np.zeros(n, dtype=np.int64)
    remaining = int(mc_samples)
    batch = 1_000_000
    while remaining > 0:
        take = min(batch, remaining)
        pts = rng.standard_normal((take, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        _, idx = tree.query(pts)
        counts += np.bincount(idx, minlength=n)
        remaining -= take
    fractions = counts / float(mc_samples)
    w = fractions * (4.0 * math.pi) / (2.0 * math.pi * SQRT_2)
    basis0 = eval_basis_block(grid, 1)
    return QuadratureWeights(grid, None, "area", w,
                             _spectrum_residual(basis0, w))


def dh_closed_form_weights(b):
    """Closed-form Driscoll-Healy weights for ``gen_equiangular(b)``.

    Ring weight at theta_j = pi*j/(2b):

        q_j = (2/b) * sin(theta_j) * sum_{p<b} sin((2p+1) theta_j) / (2p+1)

    satisfies sum_j q_j P_l(cos theta_j) = 2*delta_{l0} for l < 2b; the
    per-point weight is q_j / (2*sqrt(2)*b) so that the comb-spectrum
    constraints hold with sum(w) = sqrt(2).  The recorded residual over all
    constraints is the acceptance check for the formula.
    """
    if b < 1:
        raise ValueError(f"b must be >= 1, got {b}")
    grid = gen_equiangular(b)
    theta = math.pi * np.arange(2 * b) / (2 * b)
    p = np.arange(b)
    q = (2.0 / b) * np.sin(theta) * np.sum(
        np.sin(np.outer(theta, 2 * p + 1)) / (2 * p + 1), axis=1)
    w = np.repeat(q / (2.0 * SQRT_2 * b), 2 * b)
    basis = eval_basis_block(grid, 2 * b)
    return QuadratureWeights(grid, int(b), "dh", w,
                             _spectrum_residual(basis, w))


def sampling_spectrum(grid, weights, l_max_exclusive, _basis=None):
    """Spherical-harmonic spectrum of the weighted sampling comb.

    s_hat(l, m) = sqrt(2*pi) * sum_j w_j * conj(Y_l^m)(x_j), tabulated for
    all l < ``l_max_exclusive``.  For a valid bandwidth-b weighting the
    entry (0, 0) is 1 and everything below degree 2b vanishes.
    """
    if weights.grid.key != grid.key:
        raise ValueError(f"weights belong to {weights.grid.key}, not {grid.key}")
    basis = eval_basis_block(grid, l_max_exclusive) if _basis is None else _basis
    shat = SQRT_2PI * (np.conj(basis) @ weights.weights)
    return ShCoefficients(l_max_exclusive, shat)


def spectrum_deviation(spectrum, b):
    """Max |s_hat(l, m)| over 0 < l < 2b plus the |s_hat(0,0) - 1| defect."""
    hi = min(2 * b, spectrum.bandwidth)
    dev_dc = abs(spectrum.values[0] - 1.0)
    tail = spectrum.values[1:hi * hi]
    dev_rest = float(np.max(np.abs(tail))) if tail.size else 0.0
    return dev_dc, dev_rest
