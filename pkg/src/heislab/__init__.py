"""heislab: numerics for Heisenberg-group calculus and Kirchhoff-type variational problems.

The package is organised around five layers:

* ``geometry``     -- closed-form group operations, Koranyi gauge, dilations;
* ``grid``         -- box grids, scalar/horizontal-vector fields, serialization;
* ``operators``    -- finite-difference left-invariant vector fields, sub-Laplacians,
                      twisted Laplacians, p-sub-Laplacians (plus an exact polynomial mode);
* ``hermite``      -- Hermite functions, the unitary 1-d Fourier transform, and the
                      Fourier-Wigner transform with its special-Hermite family;
* ``spectral``     -- assembled twisted operators, Landau-ladder fits, eigenfunction
                      residuals, convention adjudication, and Weyl sequence probes;
* ``variational``  -- the Kirchhoff-type energy, its exact discrete gradient, grid
                      Folland-Stein constants, and a path-deformation mountain-pass solver.

``cli`` wires the layers into reproducible experiment campaigns.
"""

from .geometry import (
    GroupParams,
    HeisPoint,
    dilate,
    group_inv,
    group_mul,
    in_ball,
    koranyi_dist,
    koranyi_norm,
)
from .grid import BoxGrid, HorizontalVectorField, ScalarField, load_field, save_field
from .operators import (
    H3,
    HN,
    FieldConvention,
    apply_T,
    apply_X,
    apply_Y,
    apply_Z,
    apply_Zbar,
    commutator_check,
    horizontal_divergence,
    horizontal_gradient,
    null_covector,
    p_sublaplacian,
    sublaplacian,
    sublaplacian_expanded,
    symbol_L,
    twisted_laplacian,
)
from .polyfield import PolyField
from .hermite import (
    Profile1D,
    SampledProfile,
    WignerSpec,
    fourier_transform_1d,
    fourier_wigner,
    hermite_fn,
    hermite_fn_scaled,
    hermite_poly,
    hermite_poly_rodrigues,
    special_hermite,
    special_hermite_field,
)
from .spectral import (
    ConventionChoice,
    GramResult,
    LadderFit,
    SpectralReport,
    WeylProbeResult,
    assemble_twisted,
    cluster_eigenvalues,
    convention_search,
    eigenfunction_residual,
    gram_matrix,
    landau_structure_fit,
    lowest_eigenvalues,
    tabulate_eigenfunction,
    vertical_bridge_sign,
    weyl_probe,
)
from .variational import (
    FSResult,
    GrowthNonlinearity,
    KirchhoffM,
    KirchhoffProblem,
    MPResult,
    dirichlet_field,
    energy,
    folland_stein_constant,
    gradient,
    hw_norm,
    mountain_pass_solve,
    mp_geometry_check,
    mp_threshold,
    ps_monitor,
    random_dirichlet_field,
    ray_scan,
    validate_exponents,
    zero_boundary,
)

__version__ = "0.1.0"
