"""Spatially clustered varying coefficient regression.

Coefficients are spline surfaces that are fused along the edges of a
Euclidean minimum spanning tree, so neighbouring locations share a surface
unless the data say otherwise.
"""
from .admm import FitResult, ProblemSpec, fit, oracle_fit
from .basis import BasisSystem, build_basis
from .data import SpatialDataset
from .graph import MstGraph, Partition, euclidean_mst
from .penalty import PenaltyConfig, PenaltyKind, group_threshold, lasso, mcp, scad
from .tuning import bic, nelder_mead, tune

__all__ = [
    "BasisSystem",
    "FitResult",
    "MstGraph",
    "Partition",
    "PenaltyConfig",
    "PenaltyKind",
    "ProblemSpec",
    "SpatialDataset",
    "bic",
    "build_basis",
    "euclidean_mst",
    "fit",
    "group_threshold",
    "lasso",
    "mcp",
    "nelder_mead",
    "oracle_fit",
    "scad",
    "tune",
]
