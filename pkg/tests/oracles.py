"""Independent reference implementations used only by the tests."""

import numpy as np

from fibsh.harmonics import eval_ylm, flat_index


def legendre_normalized_mp(l, m, x, dps=50):
    """Same normalized recurrence evaluated in mpmath extended precision."""
    import mpmath as mp

    with mp.workdps(dps):
        x = mp.mpf(x)
        s = mp.sqrt(1 - x * x)
        pmm = 1 / mp.sqrt(4 * mp.pi)
        for mm in range(1, m + 1):
            pmm *= s * mp.sqrt(mp.mpf(2 * mm + 1) / (2 * mm))
        if l == m:
            return float(pmm)
        p_prev, p_curr = pmm, mp.sqrt(mp.mpf(2 * m + 3)) * x * pmm
        for ll in range(m + 2, l + 1):
            a = mp.sqrt(mp.mpf(4 * ll * ll - 1) / (ll * ll - m * m))
            b = mp.sqrt(mp.mpf(2 * ll + 1) * ((ll - 1) ** 2 - m * m)
                        / (mp.mpf(2 * ll - 3) * (ll * ll - m * m)))
            p_prev, p_curr = p_curr, a * x * p_curr - b * p_prev
        return float(p_curr)


def naive_synthesis(coeffs, theta, phi):
    """Direct nested-sum synthesis through scalar eval_ylm calls."""
    out = np.zeros(len(theta), dtype=np.complex128)
    for j, (t, p) in enumerate(zip(theta, phi)):
        acc = 0.0 + 0.0j
        for l in range(coeffs.bandwidth):
            for m in range(-l, l + 1):
                acc += coeffs.values[flat_index(l, m)] * eval_ylm(l, m, (t, p))
        out[j] = acc
    return out


def brute_min_separation(grid):
    """Minimum pairwise great-circle angle by full pair enumeration."""
    xyz = grid.unit_vectors
    best = np.pi
    for i in range(len(xyz) - 1):
        dots = xyz[i + 1:] @ xyz[i]
        best = min(best, float(np.arccos(np.clip(dots.max(), -1.0, 1.0))))
    return best
