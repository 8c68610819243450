"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The active path is chosen once at import time: numba is used when it is
importable and the environment variable ``FIBSH_NO_NUMBA`` is unset (or set
to a falsy value).  ``benchmarks/bench_kernels.py`` times the two paths
against each other.

Both paths evaluate the same recurrences in the same order, so they agree
to the last few ulps; the numba path is additionally bit-reproducible
across thread counts because every output column is computed independently.
"""

import math
import os

import numpy as np

INV_SQRT_4PI = 0.28209479177387814  # 1/sqrt(4*pi)


def _env_flag(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


def numba_requested():
    return not _env_flag("FIBSH_NO_NUMBA")


# ---------------------------------------------------------------------------
# pure-numpy implementations (vectorized over grid points)
# ---------------------------------------------------------------------------

def basis_block_numpy(theta, phi, l_max):
    """Dense complex block of orthonormal Y_l^m values.

    Row l*l+l+m (0 <= l < l_max, |m| <= l), column j holds Y_l^m at
    (theta[j], phi[j]).  Condon-Shortley phase included.
    """
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    n = theta.size
    x = np.cos(theta)
    s = np.sin(theta)
    out = np.empty((l_max * l_max, n), dtype=np.complex128)
    pmm = np.full(n, INV_SQRT_4PI)
    for m in range(l_max):
        if m > 0:
            pmm = pmm * s * math.sqrt((2.0 * m + 1.0) / (2.0 * m))
        e = np.exp(1j * m * phi)
        cs = -1.0 if (m % 2) else 1.0
        val = cs * pmm * e
        out[m * m + 2 * m] = val
        if m > 0:
            out[m * m] = cs * np.conj(val)
        if m + 1 < l_max:
            p_prev = pmm
            p_curr = math.sqrt(2.0 * m + 3.0) * x * pmm
            val = cs * p_curr * e
            out[(m + 1) * (m + 1) + (m + 1) + m] = val
            if m > 0:
                out[(m + 1) * (m + 1) + (m + 1) - m] = cs * np.conj(val)
            for l in range(m + 2, l_max):
                a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                b = math.sqrt((2.0 * l + 1.0) * ((l - 1.0) ** 2 - m * m)
                              / ((2.0 * l - 3.0) * (l * l - m * m)))
                p_prev, p_curr = p_curr, a * x * p_curr - b * p_prev
                val = cs * p_curr * e
                out[l * l + l + m] = val
                if m > 0:
                    out[l * l + l - m] = cs * np.conj(val)
    return out


def gaussian_splat_numpy(grid_xyz, cloud_xyz, inv_two_sigma_sq):
    """Sum of Gaussian angular bumps from cloud points onto grid directions.

    Returns, for each grid direction u, sum_p exp(-angle(u, p)^2 * inv_two_sigma_sq).
    """
    grid_xyz = np.asarray(grid_xyz, dtype=np.float64)
    cloud_xyz = np.asarray(cloud_xyz, dtype=np.float64)
    out = np.zeros(grid_xyz.shape[0])
    if cloud_xyz.shape[0] == 0:
        return out
    # chunk the cloud to bound the (n_grid, n_cloud) intermediate
    chunk = max(1, int(4e6) // max(1, grid_xyz.shape[0]))
    for start in range(0, cloud_xyz.shape[0], chunk):
        dots = grid_xyz @ cloud_xyz[start:start + chunk].T
        np.clip(dots, -1.0, 1.0, out=dots)
        ang = np.arccos(dots)
        out += np.exp(-(ang * ang) * inv_two_sigma_sq).sum(axis=1)
    return out


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

def _build_numba_kernels():
    import numba

    @numba.njit(cache=True, parallel=True)
    def basis_block_nb(theta, phi, l_max):  # pragma: no cover - jitted
        n = theta.shape[0]
        out = np.empty((l_max * l_max, n), dtype=np.complex128)
        for j in numba.prange(n):
            x = math.cos(theta[j])
            s = math.sin(theta[j])
            pmm = INV_SQRT_4PI
            for m in range(l_max):
                if m > 0:
                    pmm = pmm * s * math.sqrt((2.0 * m + 1.0) / (2.0 * m))
                e = complex(math.cos(m * phi[j]), math.sin(m * phi[j]))
                cs = -1.0 if (m % 2) else 1.0
                val = cs * pmm * e
                out[m * m + 2 * m, j] = val
                if m > 0:
                    out[m * m, j] = cs * val.conjugate()
                if m + 1 < l_max:
                    p_prev = pmm
                    p_curr = math.sqrt(2.0 * m + 3.0) * x * pmm
                    val = cs * p_curr * e
                    out[(m + 1) * (m + 1) + (m + 1) + m, j] = val
                    if m > 0:
                        out[(m + 1) * (m + 1) + (m + 1) - m, j] = cs * val.conjugate()
                    for l in range(m + 2, l_max):
                        a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                        b = math.sqrt((2.0 * l + 1.0) * ((l - 1.0) ** 2 - m * m)
                                      / ((2.0 * l - 3.0) * (l * l - m * m)))
                        p_new = a * x * p_curr - b * p_prev
                        p_prev = p_curr
                        p_curr = p_new
                        val = cs * p_curr * e
                        out[l * l + l + m, j] = val
                        if m > 0:
                            out[l * l + l - m, j] = cs * val.conjugate()
        return out

    @numba.njit(cache=True, parallel=True)
    def gaussian_splat_nb(grid_xyz, cloud_xyz, inv_two_sigma_sq):  # pragma: no cover - jitted
        n = grid_xyz.shape[0]
        m = cloud_xyz.shape[0]
        out = np.zeros(n)
        for i in numba.prange(n):
            gx = grid_xyz[i, 0]
            gy = grid_xyz[i, 1]
            gz = grid_xyz[i, 2]
            acc = 0.0
            for p in range(m):
                d = gx * cloud_xyz[p, 0] + gy * cloud_xyz[p, 1] + gz * cloud_xyz[p, 2]
                if d > 1.0:
                    d = 1.0
                elif d < -1.0:
                    d = -1.0
                ang = math.acos(d)
                acc += math.exp(-(ang * ang) * inv_two_sigma_sq)
            out[i] = acc
        return out

    return basis_block_nb, gaussian_splat_nb


USE_NUMBA = False
if numba_requested():
    try:
        basis_block, gaussian_splat = _build_numba_kernels()
        USE_NUMBA = True
    except ImportError:
        basis_block, gaussian_splat = basis_block_numpy, gaussian_splat_numpy
else:
    basis_block, gaussian_splat = basis_block_numpy, gaussian_splat_numpy


def set_threads(n):
    """Limit kernel parallelism (no-op on the numpy path)."""
    if USE_NUMBA and n:
        import numba

        numba.set_num_threads(
            max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
