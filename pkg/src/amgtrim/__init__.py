"""amgtrim: classical algebraic multigrid with sparsified, restorable
coarse operators and an explicit communication-cost model.

The pieces, bottom up: ``csr`` (canonical matrix container), ``problems``
(model operators), ``hierarchy`` (strength / CF splitting / interpolation /
Galerkin setup), ``sparsify`` (minimal pattern, keep sets, lumping, delta
logs, restore), ``smooth`` + ``solve`` (relaxation, V-cycle, PCG/GMRES, the
adaptive re-add controller), ``perfmodel`` (partitioned SpMV cost model),
and ``cli`` (the ``amgtrim`` command).
"""

from .config import ConfigError, RunConfig, load_config, parse_config
from .csr import (
    CsrMatrix,
    add_scaled,
    is_symmetric,
    matmat,
    prune,
    spmv,
    symmetrize,
    transpose,
)
from .hierarchy import (
    CfSplitting,
    Hierarchy,
    Level,
    StrengthMatrix,
    amg_setup,
    cf_split,
    direct_interpolation,
    galerkin_product,
    strength,
)
from .mmio import MatrixMarketError, read_matrix_market, write_matrix_market
from .perfmodel import (
    LevelProfile,
    ModelParams,
    PartitionStats,
    calibrate_c,
    comm_stats,
    hierarchy_profile,
    hierarchy_sends,
    modeled_spmv_time,
    partition_rows,
)
from .problems import (
    ProblemSpec,
    aniso2d_9pt,
    build_problem,
    poisson3d_7pt,
    poisson3d_27pt,
)
from .rng import splitmix64, uniform
from .smooth import SmootherSpec, relax
from .solve import (
    AdaptiveSpec,
    KrylovSpec,
    SolveReport,
    adaptive_solve,
    amg_iterate,
    gmres,
    make_preconditioner,
    next_gamma,
    pcg,
    vcycle,
)
from .sparsify import (
    DeltaLog,
    DeltaRecord,
    DropSchedule,
    SparsityPattern,
    keep_set,
    lump_diagonal,
    lump_neighbors,
    minimal_pattern,
    restore,
    sparse_hybrid_setup,
    sparsify,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveSpec",
    "CfSplitting",
    "ConfigError",
    "CsrMatrix",
    "DeltaLog",
    "DeltaRecord",
    "DropSchedule",
    "Hierarchy",
    "KrylovSpec",
    "Level",
    "LevelProfile",
    "MatrixMarketError",
    "ModelParams",
    "PartitionStats",
    "ProblemSpec",
    "RunConfig",
    "SmootherSpec",
    "SolveReport",
    "SparsityPattern",
    "StrengthMatrix",
    "add_scaled",
    "adaptive_solve",
    "amg_iterate",
    "amg_setup",
    "aniso2d_9pt",
    "build_problem",
    "calibrate_c",
    "cf_split",
    "comm_stats",
    "direct_interpolation",
    "galerkin_product",
    "gmres",
    "hierarchy_profile",
    "hierarchy_sends",
    "is_symmetric",
    "keep_set",
    "load_config",
    "lump_diagonal",
    "lump_neighbors",
    "make_preconditioner",
    "matmat",
    "minimal_pattern",
    "modeled_spmv_time",
    "next_gamma",
    "parse_config",
    "partition_rows",
    "pcg",
    "poisson3d_27pt",
    "poisson3d_7pt",
    "prune",
    "read_matrix_market",
    "relax",
    "restore",
    "sparse_hybrid_setup",
    "sparsify",
    "splitmix64",
    "spmv",
    "strength",
    "symmetrize",
    "transpose",
    "uniform",
    "vcycle",
    "write_matrix_market",
]
