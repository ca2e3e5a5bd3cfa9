"""Frame-wise voting: majority (mode) of the voicing flags, median of the
voiced members' frequencies."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .track import FrameValue, PitchTrack, TrackSet


class TieRule(str, Enum):
    FAVOR_VOICED = "favor-voiced"
    FAVOR_UNVOICED = "favor-unvoiced"


class MedianDomain(str, Enum):
    HZ = "hz"
    LOG_HZ = "log-hz"


@dataclass(frozen=True)
class VoteConfig:
    tie_rule: TieRule = TieRule.FAVOR_VOICED
    median_domain: MedianDomain = MedianDomain.HZ
    # only members voting Voiced at a frame contribute to its median
    contributor_rule: str = "voiced-members-only"

    def __post_init__(self):
        object.__setattr__(self, "tie_rule", TieRule(self.tie_rule))
        object.__setattr__(self, "median_domain", MedianDomain(self.median_domain))


def _median_rows(freq: np.ndarray, domain: MedianDomain) -> np.ndarray:
    """Row-wise median ignoring NaN. Odd counts return the middle element
    itself (so both domains agree exactly); even counts average the two
    central values arithmetically (Hz) or geometrically (log Hz)."""
    s = np.sort(freq, axis=1)  # NaN sorts last
    count = np.count_nonzero(~np.isnan(s), axis=1)
    out = np.full(s.shape[0], np.nan)
    rows = np.arange(s.shape[0])
    has = count > 0
    lo = np.where(has, (count - 1) // 2, 0)
    hi = np.where(has, count // 2, 0)
    a = s[rows, lo]
    b = s[rows, hi]
    odd = has & (count % 2 == 1)
    even = has & ~odd
    out[odd] = a[odd]
    if domain is MedianDomain.HZ:
        out[even] = (a[even] + b[even]) / 2.0
    else:
        out[even] = np.sqrt(a[even] * b[even])
    return out


def _vote_arrays(voiced: np.ndarray, freq: np.ndarray, cfg: VoteConfig):
    n = voiced.shape[1]
    n_voiced = voiced.sum(axis=1)
    if cfg.tie_rule is TieRule.FAVOR_VOICED:
        out_v = 2 * n_voiced >= n
    else:
        out_v = 2 * n_voiced > n
    out_v &= n_voiced > 0
    med = _median_rows(np.where(voiced, freq, np.nan), cfg.median_domain)
    return out_v, np.where(out_v, med, np.nan)


def vote_frame(values: Sequence[FrameValue], cfg: VoteConfig = VoteConfig()) -> FrameValue:
    if not values:
        raise ValueError("vote_frame needs at least one value")
    voiced = np.array([[v.voiced for v in values]])
    freq = np.array([[v.frequency if v.voiced else np.nan for v in values]], dtype=float)
    out_v, out_f = _vote_arrays(voiced, freq, cfg)
    return FrameValue.v(out_f[0]) if out_v[0] else FrameValue.u()


def vote_set(ts: TrackSet, cfg: VoteConfig = VoteConfig()) -> PitchTrack:
    """Vote over all members of ``ts`` (the ground truth never votes)."""
    tracks = list(ts.members.values())
    voiced = np.stack([t.voiced for t in tracks], axis=1)
    freq = np.stack([t.freq for t in tracks], axis=1)
    out_v, out_f = _vote_arrays(voiced, freq, cfg)
    return tracks[0].with_values(out_v, out_f)
