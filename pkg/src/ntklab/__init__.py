"""Numerical laboratory for conjugate-kernel and neural-tangent-kernel
random matrices: deformed semicircle law, concentration checks, and
random-feature regression asymptotics for two-layer random networks."""

__version__ = "0.1.0"

from .accel import backend_name
from .activation import Activation, HermiteData, hermite_data, hermite_poly, normalize
from .datagen import (
    DataMatrix,
    OrthonormalityReport,
    SpectralMeasure,
    empirical_measure,
    generate,
    mp_density,
    mp_measure,
    orthonormality,
)
from .kernels import (
    KernelMatrices,
    WeightDraw,
    build_empirical,
    draw_weights,
    expected_phi,
    expected_psi,
    linear_equivalents,
    mu_vector,
    phi0,
    psi0,
)
from .law import (
    LawSolution,
    PointSolution,
    deform,
    density_cdf,
    free_second_moment,
    moments,
    solve_density,
    solve_point,
)
from .spectral import ESD, CenteredEnsemble, center, esd, histogram, ks_distance, w1_distance
