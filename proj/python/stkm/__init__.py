"""Spatiotemporal k-means: fit moving centers, then group objects by how often they share a cluster."""

from ._stkm import (
    StkmError,
    ami,
    extract_assignments,
    fit,
    fit_robust,
    generate,
    load_trajectories,
    long_term_ami,
    long_term_clusters,
    objective,
    project_simplex,
    similarity_matrix,
    total_ami,
)

__all__ = [
    "StkmError",
    "ami",
    "extract_assignments",
    "fit",
    "fit_robust",
    "generate",
    "load_trajectories",
    "long_term_ami",
    "long_term_clusters",
    "objective",
    "project_simplex",
    "similarity_matrix",
    "total_ami",
]
