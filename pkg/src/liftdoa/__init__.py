"""Self-calibrating off-grid DoA estimation via lifted block-sparse conic programming.

A uniform linear array with unknown per-sensor complex gains observes
far-field narrowband sources whose directions fall off the search grid.
Lifting the bilinear (gains x signals) unknown to a rank-one matrix makes
the measurement linear; a two-layer group-norm objective over a
second-order cone program recovers the lifted matrix, and SVD plus sign
enumeration turn it into calibration and direction estimates.
"""

from .lifting import AngleGrid, Dictionary, LiftedOperator, build_dictionary, \
    build_grid, lift_scene
from .model import ArrayGeometry, CalibrationModel, GroundTruth, SnapshotSet, \
    SourceScene, dft_calibration_basis, simulate, steering_derivative, \
    steering_vector
from .norms import NormReport, corollary_check, entrywise_l1, group_norms, \
    norm_212, nuclear_norm
from .program import ConicProgram, VariableMap, build_program, dump_program, \
    load_program, select_eta
from .recovery import RecoveryResult, beta_magnitude, detect_support, estimate, \
    rank_one_factor, recover_sign
from .solver import ConicSolution, SolverSettings, project_soc, solve

__version__ = "0.1.0"

__all__ = [
    "AngleGrid", "ArrayGeometry", "CalibrationModel", "ConicProgram",
    "ConicSolution", "Dictionary", "GroundTruth", "LiftedOperator",
    "NormReport", "RecoveryResult", "SnapshotSet", "SolverSettings",
    "SourceScene", "VariableMap", "beta_magnitude", "build_dictionary",
    "build_grid", "build_program", "corollary_check", "detect_support",
    "dft_calibration_basis", "dump_program", "entrywise_l1", "estimate",
    "group_norms", "lift_scene", "load_program", "norm_212", "nuclear_norm",
    "project_soc", "rank_one_factor", "recover_sign", "select_eta",
    "simulate", "solve", "steering_derivative", "steering_vector",
]
