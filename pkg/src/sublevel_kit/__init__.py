"""sublevel_kit: volumes, level-set areas, and fiber integrals of scalar fields.

The package measures three quantities for a scalar field f on R^n and checks
the identities that tie them together:

* ``V(t)``  -- volume of the sublevel set {f <= t} (grid or Monte Carlo),
* ``A(t)``  -- surface area of the level set {f = t} (mesh or shell),
* ``J_g(t)`` -- fiber integral of a density g over {f = t} weighted by
  1/|grad f|, so that ``V'(t) = J_1(t)``.

On top of the raw estimators it provides:

* mean-value witnesses xi with |grad f(xi)| ~= A(t)/J(t),
* per-component decompositions for fields whose fibers split into several
  smooth pieces, with the summed identity V'(t) = sum_k A_k / |grad f(xi_k)|,
* closed-form oracles for weighted-l1 (cross-polytope) fields,
* power-law decay fits  A(t)/V'(t) ~ c * t^nu  with certified bounds,
* a command line front end (``sublevel-kit``) exposing every check.
"""

from .errors import (
    CriticalProximityError,
    DataError,
    DecompositionMismatchError,
    DomainError,
    FieldIdError,
    IntegrandError,
    LevelRangeError,
    MeanValueSearchError,
    NonDifferentiablePointError,
    ParameterError,
    SandwichViolationError,
    SublevelKitError,
    SupportViolationError,
    TooThinShellError,
)
from .field import (
    FieldOracle,
    ScalarField,
    corpus,
    corpus_ids,
    finite_difference_gradient,
    get_field,
    parse_field_id,
    unit_ball_volume,
)
from .geometry import (
    FiberEstimate,
    LevelSetMesh,
    area,
    default_delta,
    extract_levelset,
    fiber_integral_mesh,
    fiber_integral_shell,
    levelset_family,
    load_facets,
    save_facets,
    shell_scan,
    unit_density,
)
from .volume import (
    VolumeCurve,
    volume_curve,
    volume_derivative,
    volume_derivatives,
    volume_grid,
    volume_mc,
)
from .gelfand_leray import (
    GLIntegralResult,
    MeanValueWitness,
    bump_density,
    check_coarea,
    check_main_theorem,
    check_v_prime_equals_j,
    find_mean_value_point,
    gl_integral,
    plateau_density,
)
from .piecewise import (
    ComponentDecomposition,
    PolytopeOracle,
    check_dilation,
    check_piecewise_theorem,
    decompose,
    polytope_oracle,
)
from .asymptotics import (
    ExponentFit,
    check_decay_bound,
    default_fit_levels,
    fit_exponent,
)
from .reporting import CheckReport

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "SublevelKitError",
    "DomainError",
    "FieldIdError",
    "ParameterError",
    "LevelRangeError",
    "NonDifferentiablePointError",
    "IntegrandError",
    "CriticalProximityError",
    "TooThinShellError",
    "SandwichViolationError",
    "MeanValueSearchError",
    "DecompositionMismatchError",
    "SupportViolationError",
    "DataError",
    # fields
    "ScalarField",
    "FieldOracle",
    "get_field",
    "parse_field_id",
    "corpus",
    "corpus_ids",
    "finite_difference_gradient",
    "unit_ball_volume",
    # geometry
    "LevelSetMesh",
    "FiberEstimate",
    "extract_levelset",
    "levelset_family",
    "area",
    "fiber_integral_mesh",
    "fiber_integral_shell",
    "shell_scan",
    "default_delta",
    "unit_density",
    "save_facets",
    "load_facets",
    # volume
    "VolumeCurve",
    "volume_grid",
    "volume_mc",
    "volume_curve",
    "volume_derivative",
    "volume_derivatives",
    # fiber integrals / mean value
    "GLIntegralResult",
    "MeanValueWitness",
    "gl_integral",
    "find_mean_value_point",
    "bump_density",
    "plateau_density",
    "check_v_prime_equals_j",
    "check_main_theorem",
    "check_coarea",
    # piecewise
    "ComponentDecomposition",
    "PolytopeOracle",
    "polytope_oracle",
    "decompose",
    "check_piecewise_theorem",
    "check_dilation",
    # asymptotics
    "ExponentFit",
    "fit_exponent",
    "default_fit_levels",
    "check_decay_bound",
    # reporting
    "CheckReport",
]
