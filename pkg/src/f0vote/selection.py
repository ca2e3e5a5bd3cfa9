"""Greedy forward selection of a compact voting ensemble.

Two scores are available for a candidate ensemble: the RPA of its voted
(aligned) track against a reference (accuracy criterion), or the negated
average pairwise correlation of its members' error signs (correlation
criterion). Starting from a seed member, the best candidate is added at
each step until nothing improves the score strictly or the size cap is hit.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .align import DEFAULT_EPSILON, DEFAULT_SEARCH_RANGE, align_set
from .errors import DegenerateInputError
from .metrics import _joint_cents, rpa
from .track import PitchTrack, TrackSet, check_same_grid
from .vote import VoteConfig, vote_set


class Criterion(str, Enum):
    ACCURACY = "accuracy"
    CORRELATION = "correlation"


class ReferenceMode(str, Enum):
    GROUND_TRUTH = "ground-truth"
    ENSEMBLE_MEDIAN = "ensemble-median"


class StopReason(str, Enum):
    NO_IMPROVEMENT = "no-improvement"
    MAX_SIZE = "max-size"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class SignMatrix:
    """Per-member error signs against a reference.

    ``evaluable[i, l]`` is true where member ``i`` and the reference are
    both voiced; ``frame_mask[l]`` where the reference is voiced. Rows are
    0 off the evaluable set and where the error is exactly zero.
    """

    names: tuple[str, ...]
    rows: np.ndarray
    evaluable: np.ndarray
    frame_mask: np.ndarray

    @classmethod
    def from_rows(cls, names: Sequence[str], rows, evaluable=None, frame_mask=None) -> "SignMatrix":
        rows = np.asarray(rows, dtype=np.int8)
        if rows.ndim != 2 or rows.shape[0] != len(names):
            raise ValueError("rows must be a (members x frames) array")
        evaluable = np.ones(rows.shape, bool) if evaluable is None else np.asarray(evaluable, bool)
        frame_mask = np.ones(rows.shape[1], bool) if frame_mask is None else np.asarray(frame_mask, bool)
        return cls(tuple(names), rows, evaluable, frame_mask)

    def row(self, name: str) -> np.ndarray:
        return self.rows[self.names.index(name)]

    def degenerate(self) -> list[str]:
        """Names whose sign row is constant over its evaluable frames."""
        out = []
        for i, name in enumerate(self.names):
            m = self.evaluable[i] & self.frame_mask
            r = self.rows[i][m]
            if r.size == 0 or np.all(r == r[0]):
                out.append(name)
        return out


def sign_matrix(ts: TrackSet, reference: PitchTrack) -> SignMatrix:
    check_same_grid(ts.reference, reference)
    names, rows, ev = [], [], []
    for name, track in ts.members.items():
        both, dc = _joint_cents(track, reference)
        rows.append(np.where(both, np.sign(np.where(both, dc, 0.0)), 0).astype(np.int8))
        ev.append(both)
        names.append(name)
    return SignMatrix(tuple(names), np.array(rows), np.array(ev), reference.voiced.copy())


def _pearson(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Population-moment correlation; also returns both variances."""
    mx, my = x.mean(), y.mean()
    vx = float(np.mean((x - mx) ** 2))
    vy = float(np.mean((y - my) ** 2))
    if vx == 0 or vy == 0:
        return float("nan"), vx, vy
    return float(np.mean((x - mx) * (y - my)) / np.sqrt(vx * vy)), vx, vy


def avg_sign_correlation(m: SignMatrix, subset: Sequence[str]) -> float:
    """Mean Pearson correlation of the sign rows over all pairs in ``subset``.

    Each pair is restricted to masked frames where both members are
    evaluable.
    """
    if len(subset) < 2:
        raise ValueError("need at least two members for a pairwise correlation")
    idx = [m.names.index(n) for n in subset]
    total = 0.0
    for i, j in itertools.combinations(idx, 2):
        keep = m.frame_mask & m.evaluable[i] & m.evaluable[j]
        if not keep.any():
            raise DegenerateInputError(f"{m.names[i]} and {m.names[j]} share no evaluable frames")
        r, vi, vj = _pearson(m.rows[i][keep].astype(float), m.rows[j][keep].astype(float))
        if vi == 0 or vj == 0:
            which = m.names[i] if vi == 0 else m.names[j]
            raise DegenerateInputError(f"error sign of {which} is constant; correlation undefined")
        total += r
    n = len(idx)
    return total / (n * (n - 1) / 2)


@dataclass
class SelectionResult:
    chosen: list[str]
    trace: list[dict]
    criterion: Criterion
    stop_reason: StopReason
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["criterion"] = self.criterion.value
        d["stop_reason"] = self.stop_reason.value
        return d


class EnsembleScorer:
    """Scores candidate subsets of an already aligned TrackSet."""

    def __init__(self, aligned: TrackSet, reference: PitchTrack, criterion: Criterion,
                 threshold: float = 50.0, vote_cfg: VoteConfig = VoteConfig()):
        self.aligned = aligned
        self.reference = reference
        self.criterion = Criterion(criterion)
        self.threshold = threshold
        self.vote_cfg = vote_cfg
        self.signs = sign_matrix(aligned, reference) if self.criterion is Criterion.CORRELATION else None

    def __call__(self, names: Sequence[str]) -> float | None:
        if self.criterion is Criterion.ACCURACY:
            voted = vote_set(self.aligned.subset(names), self.vote_cfg)
            return rpa(voted, self.reference, self.threshold)
        if len(names) < 2:
            # a lone member has no pairwise correlation; any addition improves on it
            return float("-inf")
        try:
            return -avg_sign_correlation(self.signs, names)
        except DegenerateInputError:
            return None


def greedy_select(ts: TrackSet, seed: str | None = None,
                  criterion: Criterion | str = Criterion.ACCURACY, max_size: int = 5,
                  reference_mode: ReferenceMode | str = ReferenceMode.GROUND_TRUTH,
                  threshold: float = 50.0, H: int = DEFAULT_SEARCH_RANGE,
                  epsilon: float = DEFAULT_EPSILON,
                  vote_cfg: VoteConfig = VoteConfig()) -> SelectionResult:
    criterion = Criterion(criterion)
    reference_mode = ReferenceMode(reference_mode)
    seed = ts.reference_name if seed is None else seed
    if seed not in ts.members:
        raise ValueError(f"seed {seed!r} is not a member")
    if max_size < 1:
        raise ValueError("max_size must be >= 1")

    aligned, _ = align_set(ts, H, epsilon)
    if reference_mode is ReferenceMode.GROUND_TRUTH:
        if ts.ground_truth is None:
            raise DegenerateInputError("ground-truth reference mode needs a ground truth track")
        reference = ts.ground_truth
    else:
        # pool-wide consensus stands in for the unknown truth
        reference = vote_set(aligned, vote_cfg)

    score_of = EnsembleScorer(aligned, reference, criterion, threshold, vote_cfg)
    chosen = [seed]
    current = score_of(chosen)
    trace: list[dict] = []
    remaining = sorted(n for n in ts.members if n != seed)
    config = {
        "seed": seed, "criterion": criterion.value, "max_size": max_size,
        "reference_mode": reference_mode.value, "threshold_cents": threshold,
        "search_range": H, "epsilon_cents": epsilon,
        "tie_rule": vote_cfg.tie_rule.value, "median_domain": vote_cfg.median_domain.value,
    }

    while True:
        if len(chosen) >= max_size:
            reason = StopReason.MAX_SIZE
            break
        if not remaining:
            reason = StopReason.EXHAUSTED
            break
        scores = {name: score_of(chosen + [name]) for name in remaining}
        best, best_score = None, None
        for name in remaining:  # sorted: ties go to the smaller name
            s = scores[name]
            if s is not None and (best_score is None or s > best_score):
                best, best_score = name, s
        improved = best is not None and best_score > current
        trace.append({
            "baseline": _jsonable(current),
            "candidate_scores": {k: _jsonable(v) for k, v in scores.items()},
            "chosen": best if improved else None,
            "score": _jsonable(best_score),
        })
        if not improved:
            reason = StopReason.NO_IMPROVEMENT
            break
        chosen.append(best)
        remaining.remove(best)
        current = best_score

    return SelectionResult(chosen, trace, criterion, reason, config)


def _jsonable(x):
    if x is None or not np.isfinite(x):
        return None
    return float(x)
