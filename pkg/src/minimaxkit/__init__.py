"""First-order solvers for smooth minimax problems with oracle accounting."""

from .agd import ScalarObjective, agd, agd_suggested_bound, solve_partial
from .appa import inexact_appa, suggest_T
from .core import (Ball, Box, ConstraintSet, MinimaxProblem, OracleCounter, Simplex,
                   SmoothnessProfile, SolveResult, SolverReport, WholeSpace, grad_mapping_norm,
                   project)
from .drivers import (ReductionSpec, cc_solve, minimax_appa, minimax_ppa, nc_moreau_solve,
                      nc_solve, reduce, scc_solve, suggest_T_appa, suggest_T_ppa)
from .general_iteration import (g1, g2, nc_accelerated, nsc_accelerated, scc_near_optimal,
                                scsc_near_optimal)
from .maximin_ag2 import maximin_ag2
from .metrics import (Certificate, UncertifiableError, brute_force_saddle, duality_gap,
                      moreau_envelope, moreau_grad_norm, near_stationarity_witness,
                      phi_grad_norm, stationarity_f)
from .problems import ProblemSpec, default_start, make

__version__ = "0.1.0"

__all__ = [
    "Ball", "Box", "Certificate", "ConstraintSet", "MinimaxProblem", "OracleCounter",
    "ProblemSpec", "ReductionSpec", "ScalarObjective", "Simplex", "SmoothnessProfile",
    "SolveResult", "SolverReport", "UncertifiableError", "WholeSpace", "agd",
    "agd_suggested_bound", "brute_force_saddle", "cc_solve", "default_start", "duality_gap",
    "g1", "g2", "grad_mapping_norm", "inexact_appa", "make", "maximin_ag2", "minimax_appa",
    "minimax_ppa", "moreau_envelope", "moreau_grad_norm", "nc_accelerated", "nc_moreau_solve",
    "nc_solve", "near_stationarity_witness", "nsc_accelerated", "phi_grad_norm", "project",
    "reduce", "scc_near_optimal", "scc_solve", "scsc_near_optimal", "solve_partial",
    "stationarity_f", "suggest_T", "suggest_T_appa", "suggest_T_ppa",
]
