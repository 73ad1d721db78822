"""Finite combinatorics and linear algebra of higher-rank graphs and their unitary cocycles."""

from .homotopy import (
    CocyclePath,
    FailureReport,
    PathSearchFailed,
    SearchConfig,
    conjugation_path,
    geodesic_path,
    path_search,
    residual_gradient,
    validate_path,
)
from .kgraph import (
    CubicalCocycle,
    FactorisationRule,
    SearchTruncated,
    enumerate_factorisations,
    flip_factorisation,
    validate_cubical_cocycle,
    validate_factorisation,
)
from .ktheory import (
    AbelianGroup,
    IntMatrix,
    SmithDecomposition,
    cokernel,
    kernel_basis,
    ktheory_2graph,
    smith_normal_form,
    subquotient,
)
from .skeleton import (
    Edge,
    Skeleton,
    SkeletonFormatError,
    ValidationReport,
    adjacency_matrix,
    from_adjacency,
    single_vertex,
    two_color_paths,
    validate_skeleton,
)
from .unitary_cocycle import (
    TripleOperator,
    UnitaryCocycle,
    assemble_block,
    cocycle_residual,
    flip_cocycle,
    from_kgraph,
    gauge_transform,
    is_cocycle,
    triple_operators,
)

__version__ = "0.1.0"
