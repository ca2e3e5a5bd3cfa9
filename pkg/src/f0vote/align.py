"""Temporal and frequency bias correction of member tracks against a
reference member, applied before voting.

For every integer lag ``k`` in ``[-H, H]`` the estimate frame ``l + k`` is
paired with reference frame ``l`` and scored by the fraction of the ``L``
reference frames that form a jointly voiced pair within ``epsilon`` cents.
By default the pair cents are first centred on their median, so that a
constant frequency bias (which may far exceed ``epsilon``) does not hide
the correct lag. The best lag is then used to estimate the frequency bias
as the median cent offset over jointly voiced pairs.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateInputError
from .metrics import _joint_cents, shift_track
from .track import PitchTrack, TrackSet, check_same_grid

log = logging.getLogger(__name__)

DEFAULT_SEARCH_RANGE = 10
DEFAULT_EPSILON = 50.0


class AlignMode(str, Enum):
    FULL = "full"
    TIME_ONLY = "time-only"
    NONE = "none"


@dataclass(frozen=True)
class AlignmentCorrection:
    k_align: int = 0
    f_align: float = 0.0
    rpa_at_best: float = 0.0
    search_range: int = DEFAULT_SEARCH_RANGE
    epsilon: float = DEFAULT_EPSILON
    warning: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _lag_hits(est: PitchTrack, ref: PitchTrack, k: int, epsilon: float,
              compensate_bias: bool) -> int:
    both, dc = _joint_cents(shift_track(est, k), ref)
    if not both.any():
        return 0
    d = dc[both]
    if compensate_bias:
        d = d - np.median(d)
    return int(np.count_nonzero(np.abs(d) < epsilon))


def alignment_score(est: PitchTrack, ref: PitchTrack, k: int,
                    epsilon: float = DEFAULT_EPSILON, compensate_bias: bool = True) -> float:
    """Lag similarity normalised by the track length ``L``."""
    check_same_grid(est, ref)
    return _lag_hits(est, ref, k, epsilon, compensate_bias) / len(ref)


def find_temporal_offset(est: PitchTrack, ref: PitchTrack, H: int = DEFAULT_SEARCH_RANGE,
                         epsilon: float = DEFAULT_EPSILON,
                         compensate_bias: bool = True) -> tuple[int, float]:
    """Exhaustive argmax of :func:`alignment_score` over ``-H <= k <= H``.

    Ties go to the smallest ``|k|``, then to the negative lag.
    """
    check_same_grid(est, ref)
    if H < 0:
        raise ValueError("search range H must be >= 0")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not ref.voiced.any():
        raise DegenerateInputError("reference has no voiced frames")
    best_k, best_hits = 0, -1
    for k in sorted(range(-H, H + 1), key=lambda k: (abs(k), k)):
        hits = _lag_hits(est, ref, k, epsilon, compensate_bias)
        if hits > best_hits:
            best_k, best_hits = k, hits
    return best_k, best_hits / len(ref)


def find_frequency_bias(est: PitchTrack, ref: PitchTrack, k_align: int = 0) -> float:
    """Median cent offset of ``est`` (shifted by ``k_align``) over jointly voiced pairs."""
    check_same_grid(est, ref)
    both, dc = _joint_cents(shift_track(est, k_align), ref)
    if not both.any():
        raise DegenerateInputError("no jointly voiced frame pairs to estimate a frequency bias")
    return float(np.median(dc[both]))


def apply_correction(est: PitchTrack, corr: AlignmentCorrection) -> PitchTrack:
    shifted = shift_track(est, corr.k_align)
    if corr.f_align == 0.0:
        return shifted
    scale = 2.0 ** (-corr.f_align / 1200.0)
    return shifted.with_values(shifted.voiced, shifted.freq * scale)


def estimate_correction(est: PitchTrack, ref: PitchTrack, H: int = DEFAULT_SEARCH_RANGE,
                        epsilon: float = DEFAULT_EPSILON,
                        compensate_bias: bool = True) -> AlignmentCorrection:
    k, score = find_temporal_offset(est, ref, H, epsilon, compensate_bias)
    f = find_frequency_bias(est, ref, k)
    return AlignmentCorrection(k, f, score, H, epsilon)


def align_set(ts: TrackSet, H: int = DEFAULT_SEARCH_RANGE, epsilon: float = DEFAULT_EPSILON,
              mode: AlignMode | str = AlignMode.FULL,
              compensate_bias: bool = True) -> tuple[TrackSet, dict[str, AlignmentCorrection]]:
    """Correct every non-reference member against the reference member.

    ``mode`` selects the ablation: full correction, lag only (bias estimated
    and reported but not removed), or nothing. Members whose correction
    cannot be computed pass through unchanged with ``warning`` set.
    """
    mode = AlignMode(mode)
    ref = ts.reference
    out: dict[str, PitchTrack] = {}
    corrections: dict[str, AlignmentCorrection] = {}
    for name, track in ts.members.items():
        if name == ts.reference_name or mode is AlignMode.NONE:
            out[name] = track
            corrections[name] = AlignmentCorrection(0, 0.0, _identity_score(track, ref, epsilon),
                                                    H, epsilon)
            continue
        try:
            corr = estimate_correction(track, ref, H, epsilon, compensate_bias)
        except DegenerateInputError as exc:
            log.warning("member %s passed through uncorrected: %s", name, exc)
            out[name] = track
            corrections[name] = AlignmentCorrection(0, 0.0, 0.0, H, epsilon, warning=str(exc))
            continue
        applied = corr if mode is AlignMode.FULL else AlignmentCorrection(
            corr.k_align, 0.0, corr.rpa_at_best, H, epsilon)
        out[name] = apply_correction(track, applied)
        corrections[name] = applied
    return ts.replace_members(out), corrections


def _identity_score(track: PitchTrack, ref: PitchTrack, epsilon: float) -> float:
    both, dc = _joint_cents(track, ref)
    return int(np.count_nonzero(np.abs(dc[both]) < epsilon)) / len(ref)
