"""Ensemble f0 estimation by alignment-corrected median voting."""
from .align import AlignmentCorrection, AlignMode, align_set, apply_correction, find_frequency_bias, find_temporal_offset
from .errors import DegenerateInputError, F0VoteError, TrackFormatError
from .metrics import EvalReport, cents, delta_cent_stats, evaluate, rpa, rpa_shifted, vuv_scores
from .selection import Criterion, ReferenceMode, SelectionResult, avg_sign_correlation, greedy_select, sign_matrix
from .theory import EnsembleSpec, condorcet_exact, simulate_ensemble, validate_condorcet, validate_variance, variance_predict
from .track import FrameValue, FrequencyBounds, PitchTrack, TrackSet, emit_track, load_manifest, load_track, resample_to_grid
from .vote import MedianDomain, TieRule, VoteConfig, vote_frame, vote_set

__version__ = "0.1.0"

__all__ = [
    "AlignmentCorrection", "AlignMode", "align_set", "apply_correction", "find_frequency_bias",
    "find_temporal_offset", "DegenerateInputError", "F0VoteError", "TrackFormatError", "EvalReport",
    "cents", "delta_cent_stats", "evaluate", "rpa", "rpa_shifted", "vuv_scores", "Criterion",
    "ReferenceMode", "SelectionResult", "avg_sign_correlation", "greedy_select", "sign_matrix",
    "EnsembleSpec", "condorcet_exact", "simulate_ensemble", "validate_condorcet", "validate_variance",
    "variance_predict", "FrameValue", "FrequencyBounds", "PitchTrack", "TrackSet", "emit_track",
    "load_manifest", "load_track", "resample_to_grid", "MedianDomain", "TieRule", "VoteConfig",
    "vote_frame", "vote_set",
]
