"""Align -> vote -> evaluate, composed over a loaded TrackSet."""
from __future__ import annotations

from typing import Sequence

from .align import DEFAULT_EPSILON, DEFAULT_SEARCH_RANGE, AlignMode, align_set
from .errors import DegenerateInputError
from .metrics import DEFAULT_THRESHOLDS, evaluate
from .track import PitchTrack, TrackSet
from .vote import VoteConfig, vote_set

# report keys for the three voting settings, most corrected first
VOTING_VARIANTS = {
    "voting": AlignMode.FULL,
    "voting_wo_frequential_alignment": AlignMode.TIME_ONLY,
    "voting_wo_temporal_alignment": AlignMode.NONE,
}


def voted_track(ts: TrackSet, mode: AlignMode | str = AlignMode.FULL,
                H: int = DEFAULT_SEARCH_RANGE, epsilon: float = DEFAULT_EPSILON,
                vote_cfg: VoteConfig = VoteConfig()):
    aligned, corrections = align_set(ts, H, epsilon, mode)
    return vote_set(aligned, vote_cfg), corrections


def run_eval(ts: TrackSet, thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
             H: int = DEFAULT_SEARCH_RANGE, epsilon: float = DEFAULT_EPSILON,
             vote_cfg: VoteConfig = VoteConfig()) -> dict:
    """EvalReport dicts for every member and every voting setting."""
    truth: PitchTrack | None = ts.ground_truth
    if truth is None:
        raise DegenerateInputError("evaluation needs a ground_truth track in the manifest")
    reports = {name: evaluate(track, truth, thresholds).to_dict()
               for name, track in ts.members.items()}
    for key, mode in VOTING_VARIANTS.items():
        voted, _ = voted_track(ts, mode, H, epsilon, vote_cfg)
        reports[key] = evaluate(voted, truth, thresholds).to_dict()
    return reports
