"""fibsh: spherical harmonic transforms on Fibonacci grids.

Spherical Fibonacci sampling, analytic quadrature weights solved from the
comb-spectrum constraint system, discrete forward/inverse spherical
harmonic transforms, star-shape reconstruction, and rotation-invariant
shell descriptors, with a benchmark CLI (``fibsh``).
"""

__version__ = "0.1.0"

from .grids import (Direction, SphericalGrid, gen_equiangular, gen_fibonacci,
                    gen_icosahedral, icosphere, min_angular_separation)
from .harmonics import (ShCoefficients, eval_basis_block, eval_ylm,
                        flat_index, degree_order, legendre_normalized,
                        random_real_signal_coeffs)
from .quadrature import (InsufficientSamplesError, QuadratureWeights,
                         SolveFailedError, area_weights,
                         dh_closed_form_weights, equal_weights,
                         sampling_spectrum, solve_analytic_weights,
                         spectrum_deviation)
from .transform import (RadialField, RoundtripReport, forward_sht,
                        inverse_sht, roundtrip_error)
from .shapes import (PointCloud, StarShape, StarShapeSpec, SurfaceMesh,
                     enclosed_volume, radial_from_pointcloud,
                     reconstruct_surface, rotate_cloud, rotation_stability_report,
                     sample_cloud, surface_deviation, synth_star_corpus,
                     volume_of_radial_coeffs)
from .descriptors import (LabeledCorpus, ShellDescriptor, classify_and_pr,
                          descriptor_distance, shd, shd_for_cloud,
                          shell_decompose, synth_labeled_corpus)

#: number of Fibonacci points used by default for a bandwidth-b transform;
#: reproduces 4300 at b = 32
def fibonacci_points_for_bandwidth(b):
    import math

    return math.ceil(4.2 * b * b)
