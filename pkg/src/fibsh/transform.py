"""Discrete forward and inverse spherical harmonic transforms.

The quadrature functional 2*pi*sqrt(2) * sum_j w_j g(x_j) reproduces the
sphere integral of any g band-limited below 2b (check: g = 1 integrates to
4*pi with sum(w) = sqrt(2)), so the forward transform

    f^(l, m) = 2*pi*sqrt(2) * sum_j w_j f(x_j) conj(Y_l^m)(x_j),  l < b

is the exact analysis integral for band-limited f, and
synthesis-then-analysis is the identity on coefficient tables.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import SphericalGrid
from .harmonics import ShCoefficients, eval_basis_block, random_real_signal_coeffs

#: scale turning the weighted point sum into a sphere integral
INTEGRAL_SCALE = 2.0 * math.pi * math.sqrt(2.0)

REAL_SIGNAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RadialField:
    """Sample values attached to a grid's directions, in point order."""

    grid: SphericalGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values)
        vals = np.array(vals, order="C",
                        dtype=np.complex128 if np.iscomplexobj(vals) else np.float64)
        if vals.shape != (self.grid.n_points,):
            raise ValueError("field length must equal grid point count")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)
        self.values.setflags(write=False)

    def to_json(self):
        if np.iscomplexobj(self.values):
            raise ValueError("only real fields serialize to JSON")
        return {"grid": self.grid.to_json(),
                "values": [float(v) for v in self.values]}

    @classmethod
    def from_json(cls, obj):
        return cls(SphericalGrid.from_json(obj["grid"]),
                   np.asarray(obj["values"], dtype=np.float64))


def forward_sht(field, weights, b, _basis=None):
    """Project a sampled field onto the Y_l^m basis: b^2 coefficients.

    The field and weights must reference the same grid, and analytic/dh
    weights must have been solved at bandwidth >= b.
    """
    if field.grid.key != weights.grid.key:
        raise ValueError(
            f"field on {field.grid.key} but weights on {weights.grid.key}")
    if weights.bandwidth is not None and b > weights.bandwidth:
        raise ValueError(
            f"transform bandwidth {b} exceeds weight bandwidth {weights.bandwidth}")
    basis = eval_basis_block(field.grid, b) if _basis is None else _basis[:b * b]
    coeffs = INTEGRAL_SCALE * (np.conj(basis) @ (weights.weights * field.values))
    return ShCoefficients(b, coeffs)


#: chunk size (basis entries) for synthesis over many targets
_SYNTH_CHUNK_ENTRIES = 2 ** 22


def inverse_sht(coeffs, targets, _basis=None):
    """Synthesize f = sum f^(l,m) Y_l^m at target directions.

    ``targets`` may be a SphericalGrid (returns a RadialField) or an (n, 2)
    array of (theta, phi) rows / list of Directions (returns the value
    array).  Tables passing the real-signal symmetry yield real values.
    Large target sets are processed in chunks to bound the basis-matrix
    footprint.
    """
    b = coeffs.bandwidth
    if _basis is not None:
        values = coeffs.values @ _basis[:b * b]
    else:
        from .harmonics import _as_theta_phi

        theta, phi = _as_theta_phi(targets)
        chunk = max(1, _SYNTH_CHUNK_ENTRIES // (b * b))
        values = np.empty(theta.size, dtype=np.complex128)
        for start in range(0, theta.size, chunk):
            block = eval_basis_block(
                np.stack([theta[start:start + chunk],
                          phi[start:start + chunk]], axis=1), b)
            values[start:start + chunk] = coeffs.values @ block
    if coeffs.is_real_signal(REAL_SIGNAL_TOL):
        values = values.real
    if isinstance(targets, SphericalGrid):
        return RadialField(targets, values)
    return values


@dataclass(frozen=True)
class RoundtripReport:
    """Per-trial and aggregate coefficient-recovery errors."""

    bandwidth: int
    grid_key: str
    method: str
    rmse: np.ndarray
    mae: np.ndarray

    @property
    def mean_rmse(self):
        return float(np.mean(self.rmse))

    @property
    def mean_mae(self):
        return float(np.mean(self.mae))


def roundtrip_error(b, grid, weights, trials=40, seed=0):
    """Synthesis-then-analysis error of random band-limited tables.

    Each trial draws a random real-signal coefficient table at bandwidth
    ``b``, synthesizes it on the grid, transforms back, and reports RMSE and
    MAE of the complex coefficient differences |delta| over all b^2 entries.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    basis = eval_basis_block(grid, b)
    rmse = np.empty(trials)
    mae = np.empty(trials)
    for t in range(trials):
        coeffs = random_real_signal_coeffs(b, rng)
        f = RadialField(grid, (coeffs.values @ basis).real)
        recovered = forward_sht(f, weights, b, _basis=basis)
        delta = np.abs(recovered.values - coeffs.values)
        rmse[t] = math.sqrt(float(np.mean(delta ** 2)))
        mae[t] = float(np.mean(delta))
    return RoundtripReport(b, grid.key, weights.method, rmse, mae)
