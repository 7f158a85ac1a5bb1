"""Active learning for subspace clustering."""

from ._core import (
    Clustering,
    KscResult,
    KsccResult,
    PointInfluence,
    SubalError,
    SubspaceModel,
    auc,
    best_of_restarts,
    cov_after_add,
    cov_after_delete,
    covariance,
    edit_affinity,
    fit_cluster,
    generate,
    hungarian,
    nmi,
    queries_to_perfect,
    run_experiment,
    run_ksc,
    run_kscc,
    satisfies_constraints,
    score_all,
    select,
    spectral_cluster,
    sym_eigen,
)

__all__ = [name for name in dir() if not name.startswith("_")]
