"""Frame-level pitch metrics: cent intervals, raw pitch accuracy, voicing
recall / false alarm and cent-error statistics.

All track-pair metrics assume both tracks share one grid. RPA is scored over
reference-voiced frames; a frame counts only when the estimate is voiced and
strictly within the threshold.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateInputError
from .track import PitchTrack, check_same_grid

DEFAULT_THRESHOLDS = (5.0, 25.0, 50.0)


def cents(f_hat, f_ref):
    """Interval of ``f_hat`` relative to ``f_ref`` in cents, 1200*log2(f_hat/f_ref)."""
    a = np.asarray(f_hat, dtype=float)
    b = np.asarray(f_ref, dtype=float)
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise ValueError("cents() needs strictly positive frequencies")
    out = 1200.0 * (np.log2(a) - np.log2(b))
    return float(out) if out.ndim == 0 else out


def _joint_cents(est: PitchTrack, ref: PitchTrack):
    """(mask, cents) where the mask marks frames voiced in both tracks."""
    both = est.voiced & ref.voiced
    dc = np.full(len(ref), np.nan)
    if both.any():
        dc[both] = cents(est.freq[both], ref.freq[both])
    return both, dc


def rpa(est: PitchTrack, ref: PitchTrack, threshold: float = 50.0) -> float:
    return rpa_shifted(est, ref, 0, threshold)


def rpa_shifted(est: PitchTrack, ref: PitchTrack, k: int, threshold: float = 50.0) -> float:
    """RPA pairing estimate frame ``l + k`` with reference frame ``l``.

    Reference-voiced frames whose partner falls off the track count as misses.
    """
    check_same_grid(est, ref)
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    L = len(ref)
    if abs(k) > L - 1:
        raise ValueError(f"|k| must be <= L-1 = {L - 1}")
    n_ref = int(ref.voiced.sum())
    if n_ref == 0:
        raise DegenerateInputError("reference has no voiced frames")
    shifted = shift_track(est, k)
    both, dc = _joint_cents(shifted, ref)
    hit = both & (np.abs(np.where(both, dc, np.inf)) < threshold)
    return int(hit.sum()) / n_ref


def shift_track(track: PitchTrack, k: int) -> PitchTrack:
    """Frame ``l`` of the result is frame ``l + k`` of ``track``; frames
    whose source falls outside the track are unvoiced."""
    L = len(track)
    voiced = np.zeros(L, dtype=bool)
    freq = np.full(L, np.nan)
    lo, hi = max(0, -k), min(L, L - k)
    if lo < hi:
        voiced[lo:hi] = track.voiced[lo + k:hi + k]
        freq[lo:hi] = track.freq[lo + k:hi + k]
    return track.with_values(voiced, freq)


def vuv_scores(est: PitchTrack, ref: PitchTrack) -> tuple[float, float]:
    """(recall, false_alarm) with voiced frames as the positive class."""
    check_same_grid(est, ref)
    pos = ref.voiced
    neg = ~ref.voiced
    if not pos.any():
        raise DegenerateInputError("recall undefined: reference has no voiced frames")
    if not neg.any():
        raise DegenerateInputError("false alarm undefined: reference has no unvoiced frames")
    recall = int((pos & est.voiced).sum()) / int(pos.sum())
    false_alarm = int((neg & est.voiced).sum()) / int(neg.sum())
    return recall, false_alarm


def delta_cent_stats(est: PitchTrack, ref: PitchTrack) -> tuple[float, float]:
    """Mean and sample std (ddof=1) of the cent error over jointly voiced frames."""
    check_same_grid(est, ref)
    both, dc = _joint_cents(est, ref)
    if both.sum() < 2:
        raise DegenerateInputError("need at least 2 jointly voiced frames for cent statistics")
    d = dc[both]
    return float(d.mean()), float(d.std(ddof=1))


@dataclass
class EvalReport:
    delta_cent_mean: float | None
    delta_cent_std: float | None
    rpa: dict[str, float | None]
    vuv_recall: float | None
    vuv_false_alarm: float | None
    counted_frames: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary(self) -> str:
        def pct(x):
            return "n/a" if x is None else f"{100 * x:.2f}"
        if self.delta_cent_mean is None:
            dc = "n/a"
        else:
            dc = f"{self.delta_cent_mean:.2f} +/- {self.delta_cent_std:.2f}"
        rpas = " ".join(f"RPA{k}={pct(v)}" for k, v in self.rpa.items())
        return (f"dcent={dc} {rpas} recall={pct(self.vuv_recall)} "
                f"false_alarm={pct(self.vuv_false_alarm)}")


def threshold_key(t: float) -> str:
    return f"{t:g}"


def evaluate(est: PitchTrack, ref: PitchTrack,
             thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> EvalReport:
    """Every metric at once. Undefined quantities are reported as None."""
    check_same_grid(est, ref)
    both = est.voiced & ref.voiced
    n_ref_v = int(ref.voiced.sum())
    n_ref_u = len(ref) - n_ref_v

    try:
        mean, std = delta_cent_stats(est, ref)
    except DegenerateInputError:
        mean = std = None

    rpas: dict[str, float | None] = {}
    for t in sorted(thresholds):
        rpas[threshold_key(t)] = rpa(est, ref, t) if n_ref_v else None

    recall = int((ref.voiced & est.voiced).sum()) / n_ref_v if n_ref_v else None
    fa = int((~ref.voiced & est.voiced).sum()) / n_ref_u if n_ref_u else None
    counts = {
        "frames": len(ref),
        "ref_voiced": n_ref_v,
        "ref_unvoiced": n_ref_u,
        "jointly_voiced": int(both.sum()),
    }
    return EvalReport(mean, std, rpas, recall, fa, counts)
