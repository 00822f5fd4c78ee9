"""Weak Galerkin lower-bound approximation of 2D Maxwell cavity eigenvalues."""

from .assembly import DofMap, WGSystem, assemble, build_dofmap, constraint_residual
from .eigensolver import EigenResult, SolverConfig, SolverError, solve, vnorm
from .mesh import CellKind, Mesh, MeshError, generate_uniform, load_mesh, validate
from .sourcesolver import SourceSolution, error_norms, solve_source
from .study import GammaSpec, RunConfig, StudyRecord, compute_order, export_field, run_study

__all__ = [
    "CellKind", "DofMap", "EigenResult", "GammaSpec", "Mesh", "MeshError", "RunConfig",
    "SolverConfig", "SolverError", "SourceSolution", "StudyRecord", "WGSystem", "assemble",
    "build_dofmap", "compute_order", "constraint_residual", "error_norms", "export_field",
    "generate_uniform", "load_mesh", "run_study", "solve", "solve_source", "validate", "vnorm",
]
